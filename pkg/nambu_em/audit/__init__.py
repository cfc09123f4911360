from .audit import (
    BRACKET_INVARIANT, SUPERCASIMIR, VARYING, CLASSES, EXPECTED_CLASSES, CLAIMS,
    AuditRecord, AuditThresholds, run_audit, rate_crosscheck, finite_difference_rate, rate_scale,
    failed_expectations, records_frame, format_table, audit_document,
)
