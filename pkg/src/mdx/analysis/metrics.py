"""Bit/block error and channel-MSE bookkeeping per SNR point."""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass, field

REPORT_COLUMNS = ("snr_db", "ber", "bler", "ch_mse", "n_bits", "n_blocks", "n_slots")
_FIELDS = ("bit_errors", "n_bits", "block_errors", "n_blocks", "sq_error", "sq_count", "n_slots")


@dataclass
class _Bucket:
    bit_errors: int = 0
    n_bits: int = 0
    block_errors: int = 0
    n_blocks: int = 0
    sq_error: float = 0.0
    sq_count: int = 0
    n_slots: int = 0


@dataclass
class MetricAccumulator:
    buckets: dict = field(default_factory=lambda: defaultdict(_Bucket))

    def add(self, snr_db, bit_errors=0, n_bits=0, block_errors=0, n_blocks=0, sq_error=0.0,
            sq_count=0, n_slots=0):
        b = self.buckets[float(snr_db)]
        b.bit_errors += int(bit_errors)
        b.n_bits += int(n_bits)
        b.block_errors += int(block_errors)
        b.n_blocks += int(n_blocks)
        b.sq_error += float(sq_error)
        b.sq_count += int(sq_count)
        b.n_slots += int(n_slots)
        return self

    def merge(self, other: "MetricAccumulator"):
        out = MetricAccumulator()
        for acc in (self, other):
            for snr, b in acc.buckets.items():
                out.add(snr, *(getattr(b, f) for f in _FIELDS))
        return out

    def report(self):
        """Rows sorted by SNR; points without any counted bit are omitted."""
        rows = []
        for snr in sorted(self.buckets):
            b = self.buckets[snr]
            if b.n_bits == 0:
                continue
            rows.append({
                "snr_db": snr,
                "ber": b.bit_errors / b.n_bits,
                "bler": b.block_errors / b.n_blocks if b.n_blocks else float("nan"),
                "ch_mse": b.sq_error / b.sq_count if b.sq_count else float("nan"),
                "n_bits": b.n_bits,
                "n_blocks": b.n_blocks,
                "n_slots": b.n_slots,
            })
        return rows

    def write_csv(self, path, extra=None):
        """Write the report; ``extra`` columns (e.g. config hash, seed) are appended to every row."""
        extra = extra or {}
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(list(REPORT_COLUMNS) + list(extra))
            for row in self.report():
                vals = [repr(row[c]) if isinstance(row[c], float) else row[c] for c in REPORT_COLUMNS]
                w.writerow(vals + list(extra.values()))
