"""Caption corruption and caption-accuracy scoring."""
from .corrupt import (DEGREES, KINDS, CaptionRecord, corrupt_confused, corrupt_incomplete, corrupt_incorrect,
                      corrupt_records, read_captions, synthetic_corpus, write_captions)
from .lexicon import PosLexicon
from .scores import METRICS, bleu, meteor_simplified, rouge_l, rouge_n

__all__ = ["DEGREES", "KINDS", "METRICS", "CaptionRecord", "PosLexicon", "bleu", "corrupt_confused",
           "corrupt_incomplete", "corrupt_incorrect", "corrupt_records", "meteor_simplified", "read_captions",
           "rouge_l", "rouge_n", "synthetic_corpus", "write_captions"]
