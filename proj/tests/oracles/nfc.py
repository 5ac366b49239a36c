"""Frozen NFC expectations from Python's unicodedata (tests/data/nfc_cases.json)."""
import json
import pathlib
import random
import unicodedata

OUT = pathlib.Path(__file__).resolve().parent.parent / "data" / "nfc_cases.json"

FIXED = [
    "é",
    "Café au lait",
    "각",
    "Å",
    "Å",
    "ＡＢ",
    "が",
    "ȫ",
    "Ạ̇",
    "一气呵成",
]

POOL = [chr(c) for c in range(0x41, 0x5b)] + [
    "̀", "́", "̈", "̣", "̊", "゙", "゚",
    "か", "ハ", "ᄀ", "ᅡ", "ᆨ", "é", "Å", "一", " ",
]


def main():
    rng = random.Random(7)
    inputs = FIXED + ["".join(rng.choice(POOL) for _ in range(rng.randint(1, 12))) for _ in range(300)]
    cases = [{"input": s, "nfc": unicodedata.normalize("NFC", s)} for s in inputs]
    OUT.write_text(json.dumps(cases, ensure_ascii=True) + "\n")


if __name__ == "__main__":
    main()
