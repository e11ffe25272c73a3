"""Self-contained rule-based POS tagging for caption vocabularies.

Maps tokens to {NOUN, VERB, ADJ, OTHER}. Closed-class words and anything
ambiguous fall to OTHER, which the downstream hard-negative constructor
never replaces; the open classes use common caption vocabulary plus
suffix heuristics, with NOUN as the caption-typical default.
"""

import string

CLOSED_CLASS = frozenset("""
a an the this that these those its his her their my your our some any each
every no and or but nor so yet for of in on at by to from with without over
under above below between among through during before after against about
into onto off is are was were be been being has have had do does did will
would shall should can could may might must not very too also just only
it he she they we you i them him us me as than then there here where when
while if because
""".split())

ADJECTIVES = frozenset("""
black white red blue green yellow brown grey gray orange purple pink golden
dark light bright pale small large big tiny long short tall wide narrow
thin thick round flat sharp pointy curved striped spotted fluffy smooth
rough shiny dull young old fresh plain fancy
""".split())

VERBS = frozenset("""
fly flies flying sit sits sitting stand stands standing perch perches
perching eat eats eating swim swims swimming run runs running walk walks
walking look looks looking hold holds holding wear wears wearing show shows
showing ride rides riding jump jumps jumping play plays playing sing sings
singing
""".split())

_ADJ_SUFFIXES = ("ous", "ful", "ish", "ive", "able", "ible", "less", "ish")
_VERB_SUFFIXES = ("ing", "ed")


def tag_token(token: str) -> str:
    token = token.strip(string.punctuation).lower()
    if not token or not token.isalpha():
        return "OTHER"
    if token in CLOSED_CLASS:
        return "OTHER"
    if token in ADJECTIVES:
        return "ADJ"
    if token in VERBS:
        return "VERB"
    if token.endswith("ly"):
        return "OTHER"
    if token.endswith(_ADJ_SUFFIXES):
        return "ADJ"
    if token.endswith(_VERB_SUFFIXES) and len(token) > 4:
        return "VERB"
    return "NOUN"
