"""Cat/mat BLEU value by hand-counted n-grams (tests/data/bleu_catmat.json).

candidate: the cat sat on the mat / reference: the cat is on the mat
unigram 5/6, bigram 3/5, trigram 1/4, four-gram 0/3 smoothed to 1/(2*3).
"""
import json
import math
import pathlib
from fractions import Fraction

OUT = pathlib.Path(__file__).resolve().parent.parent / "data" / "bleu_catmat.json"


def main():
    p = [Fraction(5, 6), Fraction(3, 5), Fraction(1, 4), Fraction(1, 6)]
    score = 100 * math.exp(sum(math.log(x) for x in p) / 4)
    OUT.write_text(json.dumps({"precisions": [float(x) for x in p], "brevity_penalty": 1.0,
                               "score": score}) + "\n")


if __name__ == "__main__":
    main()
