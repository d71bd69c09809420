#!/usr/bin/env python3
"""Fetch the UCI "default of credit card clients" table and write it in its
original 23-feature layout (ID, LIMIT_BAL, SEX, EDUCATION, MARRIAGE, AGE,
PAY_*, BILL_AMT*, PAY_AMT*, label).

The copy bundled with the EthicML wheel on PyPI one-hot encodes EDUCATION and
MARRIAGE; this script folds them back into single ordinal columns.
"""
import argparse
import io
import subprocess
import sys
import tempfile
import zipfile
from pathlib import Path

import pandas as pd

MEMBER = "ethicml/data/csvs/UCI_Credit_Card.csv"


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data/default_of_credit_card_clients.csv")
    ap.add_argument("--wheel", help="use an already downloaded ethicml wheel")
    args = ap.parse_args()

    wheel = args.wheel
    if wheel is None:
        tmp = tempfile.mkdtemp()
        subprocess.check_call([sys.executable, "-m", "pip", "download", "ethicml==1.3.0",
                               "--no-deps", "-d", tmp])
        wheel = next(Path(tmp).glob("ethicml-*.whl"))

    raw = pd.read_csv(io.BytesIO(zipfile.ZipFile(wheel).read(MEMBER)))
    edu = raw.filter(like="EDUCATION_")
    mar = raw.filter(like="MARRIAGE_")
    raw["EDUCATION"] = edu.values.argmax(axis=1)
    raw["MARRIAGE"] = mar.values.argmax(axis=1)
    raw = raw.rename(columns={"default-payment-next-month": "default payment next month"})

    cols = (["ID", "LIMIT_BAL", "SEX", "EDUCATION", "MARRIAGE", "AGE",
             "PAY_0", "PAY_2", "PAY_3", "PAY_4", "PAY_5", "PAY_6"]
            + [f"BILL_AMT{i}" for i in range(1, 7)]
            + [f"PAY_AMT{i}" for i in range(1, 7)]
            + ["default payment next month"])
    out = raw[cols].copy()
    for c in ["LIMIT_BAL"] + [c for c in cols if "AMT" in c]:
        out[c] = out[c].astype("int64")
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    out.to_csv(args.out, index=False)
    print(f"wrote {args.out}: {out.shape[0]} rows x {out.shape[1]} columns")
    return 0


if __name__ == "__main__":
    sys.exit(main())
