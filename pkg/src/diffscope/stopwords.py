"""Small English + French stopword lists for the word-frequency panel.

Only words of length >= 3 matter here; shorter tokens are dropped by the
tokenizer before stopwords are consulted.
"""
from __future__ import annotations

ENGLISH = frozenset(
    """
    the and for that this with have from are was were has had but not you your
    all can will just out get about they them their there here when what
    who how why been being our its than then some more most very much into
    over after before because would could should did does don didn won isn
    aren wasn http https www com
    """.split()
)

FRENCH = frozenset(
    """
    les des une dans pour que qui sur avec est sont pas plus par aux ses leur
    leurs mais comme tout tous toute toutes cette ces son ont fait être avoir
    nous vous ils elles elle lui notre votre aussi bien encore sans sous entre
    donc alors quand même peu très ete été
    """.split()
)

DEFAULT = ENGLISH | FRENCH
