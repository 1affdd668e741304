"""Shared kernel protocol constants for both engine backends."""

SEL_ALL = 0
SEL_TOPK = 1
SEL_THRESH = 2

SELF_LITERAL = 0
SELF_MAX_OTHER = 1
