from .documents import (parse_policy, policy_from_dict, policy_to_dict, read_policy_document,
                        report_to_dict, serialize_policy, serialize_report)
from .dpomdp import parse_dpomdp, read_dpomdp, write_dpomdp

__all__ = [
    "parse_dpomdp", "read_dpomdp", "write_dpomdp",
    "serialize_policy", "parse_policy", "policy_to_dict", "policy_from_dict", "read_policy_document",
    "serialize_report", "report_to_dict",
]
