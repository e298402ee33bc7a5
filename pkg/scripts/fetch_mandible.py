"""Download and prepare the fetal mandible length data.

The data ship with the R package lmtest (``Mandible``, 167 rows; the first
158 are the observations normally analysed). They are not bundled here, so
this script fetches the Rdatasets mirror, keeps rows 1-158 and writes

    length, age, log_length, log_age, log_age_sq

to ``data/mandible.csv`` (or ``--out``). The acceptance suite picks the file
up from there or from ``$GOFPERM_MANDIBLE_CSV``.

Usage::

    python scripts/fetch_mandible.py [--out PATH] [--input Mandible.csv] [--sha256 HEX]

The SHA-256 of the written file is printed; pass ``--sha256`` to verify a
previously recorded value.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import sys
import urllib.request
from pathlib import Path

import numpy as np
import pandas as pd

URL = "https://vincentarelbundock.github.io/Rdatasets/csv/lmtest/Mandible.csv"
N_ROWS = 158


def prepare(raw: pd.DataFrame) -> pd.DataFrame:
    df = raw.loc[:, ["length", "age"]].iloc[:N_ROWS].reset_index(drop=True)
    out = df.assign(log_length=np.log(df.length), log_age=np.log(df.age))
    return out.assign(log_age_sq=out.log_age**2)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parents[1] / "data" / "mandible.csv")
    ap.add_argument("--url", default=URL)
    ap.add_argument("--input", type=Path, help="use a local copy of Mandible.csv instead of downloading")
    ap.add_argument("--sha256", help="expected checksum of the prepared file")
    args = ap.parse_args(argv)

    if args.input is not None:
        raw = pd.read_csv(args.input)
    else:
        try:
            with urllib.request.urlopen(args.url, timeout=60) as resp:
                raw = pd.read_csv(io.BytesIO(resp.read()))
        except OSError as exc:
            print(f"download failed ({exc}); fetch {args.url} by hand and pass --input", file=sys.stderr)
            return 1
    text = prepare(raw).to_csv(index=False, float_format="%.17g", lineterminator="\n")
    digest = hashlib.sha256(text.encode()).hexdigest()
    if args.sha256 and digest != args.sha256.lower():
        print(f"checksum mismatch: got {digest}, expected {args.sha256}", file=sys.stderr)
        return 1
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(text, encoding="utf-8")
    print(f"wrote {args.out} ({N_ROWS} rows)\nsha256 {digest}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
