"""Small English verb-form tables backing do-support negation.

This is deliberately a lookup-plus-heuristics stemmer, not a tagger: event
texts in the source corpora are short present/past clauses with the subject
first, so classifying the first recognizable verb token is reliable enough,
and the tables keep behavior deterministic and auditable.
"""

from __future__ import annotations

BASE_VERBS = frozenset(
    """
    accept ache achieve act add admire admit adopt agree allow announce annoy
    answer apologize appear applaud apply argue arrive ask attend avoid bake
    become begin behave believe belong bike blame blow borrow bother break
    breathe bring brush build burn buy call calm care carry catch celebrate
    change charge chase chat cheat check cheer choose chop claim clean climb
    close comb come compete complain complete confess consider continue cook
    cope copy cough cover cram crash crawl create cry cut dance decide defy
    deliver describe dig discover discuss do draw dream dress drink drive drop
    drown earn eat email encourage end enjoy enter escape exercise expect
    explain fail fall feed feel fight fill find finish fix flee fly focus fold
    follow forget forgive gain gather get give go graduate greet grow guess
    hand handle hang happen hate have heal hear help hide hike hit hold hope
    hug hurry hurt ignore improve insult invite join joke jump keep kick kiss
    knit know laugh lead lean learn leave lend let lie lift like listen live
    lock look lose love make marry meet miss move mow nap need notice obey
    offer open order own pack paint panic park pass pay phone pick plan plant
    play please practice praise pray prepare pretend prevent promise propose
    protect prove pull punish push put question quit raise reach react read
    realize receive recover refuse regret relax remember remove rent repair
    repeat reply rescue rest return ride ring rise run rush save say scream
    see seek sell send set share shop shout show shut sign sing sit skate
    sleep slip smile sneeze speak spend stand start stay steal stop study
    stumble succeed suggest swim take talk teach tease tell thank think throw
    tie touch trade train travel trip try turn type understand inspect use
    visit volunteer vote wait wake walk want wash watch water wave wear
    whisper win wish wonder work worry wrap write yell
    """.split()
)

IRREGULAR_PAST = {
    "ate": "eat", "became": "become", "began": "begin", "bent": "bend",
    "bit": "bite", "bled": "bleed", "blew": "blow", "bought": "buy",
    "broke": "break", "brought": "bring", "built": "build", "burnt": "burn",
    "came": "come", "caught": "catch", "chose": "choose", "crept": "creep",
    "cut": "cut", "dealt": "deal", "did": "do", "drank": "drink",
    "drew": "draw", "drove": "drive", "fed": "feed", "fell": "fall",
    "felt": "feel", "fled": "flee", "flew": "fly", "forgave": "forgive",
    "forgot": "forget", "fought": "fight", "found": "find", "froze": "freeze",
    "gave": "give", "got": "get", "grew": "grow", "heard": "hear",
    "held": "hold", "hid": "hide", "hit": "hit", "hung": "hang",
    "hurt": "hurt", "kept": "keep", "knew": "know", "led": "lead",
    "left": "leave", "lent": "lend", "let": "let", "lost": "lose",
    "made": "make", "meant": "mean", "met": "meet", "paid": "pay",
    "put": "put", "quit": "quit", "ran": "run", "rang": "ring",
    "read": "read", "rode": "ride", "rose": "rise", "said": "say",
    "sang": "sing", "sat": "sit", "saw": "see", "sent": "send",
    "set": "set", "shook": "shake", "shut": "shut", "slept": "sleep",
    "sold": "sell", "spent": "spend", "spoke": "speak", "stole": "steal",
    "stood": "stand", "swam": "swim", "taught": "teach", "thought": "think",
    "threw": "throw", "told": "tell", "took": "take", "tore": "tear",
    "understood": "understand", "went": "go", "woke": "wake", "won": "win",
    "wore": "wear", "wrote": "write",
}

IRREGULAR_PARTICIPLES = frozenset(
    """
    beaten been bitten blown broken brought built chosen done drawn driven
    drunk eaten fallen flown forgiven forgotten frozen given gone gotten
    grown hidden known ridden risen seen shaken spoken stolen sworn taken
    thrown torn woken worn written
    """.split()
)

_THIRD_PERSON_OVERRIDES = {
    "does": "do", "goes": "go", "has": "have", "is": "be",
    "ties": "tie", "dies": "die", "lies": "lie",
}

_PAST_OVERRIDES = {"tied": "tie", "died": "die", "lied": "lie"}

_ES_STEM_ENDINGS = ("ch", "sh", "ss", "x", "z", "o")

ADVERB_WHITELIST = frozenset(
    "just often always usually really also still already sometimes even".split()
)


def split_token(token: str) -> tuple[str, str]:
    """Split a whitespace token into its word core and trailing punctuation."""
    core = token.rstrip(".,!?;:\"')]}")
    return core, token[len(core):]


def is_adverbish(token: str) -> bool:
    core, _ = split_token(token)
    low = core.lower()
    return (low.endswith("ly") and len(low) > 3) or low in ADVERB_WHITELIST


def third_person_lemma(word: str) -> str | None:
    if word in _THIRD_PERSON_OVERRIDES:
        return _THIRD_PERSON_OVERRIDES[word]
    if len(word) > 4 and word.endswith("ies"):
        return word[:-3] + "y"
    if len(word) > 3 and word.endswith("es") and word[:-2].endswith(_ES_STEM_ENDINGS):
        return word[:-2]
    if len(word) > 2 and word.endswith("s") and not word.endswith("ss"):
        return word[:-1]
    return None


def past_lemma(word: str) -> str | None:
    if word in _PAST_OVERRIDES:
        return _PAST_OVERRIDES[word]
    if word in IRREGULAR_PAST:
        return IRREGULAR_PAST[word]
    if len(word) > 3 and word.endswith("ied"):
        return word[:-3] + "y"
    if len(word) > 3 and word.endswith("ed"):
        stem = word[:-2]
        if stem in BASE_VERBS:
            return stem
        if stem + "e" in BASE_VERBS:
            return stem + "e"
        if len(stem) > 2 and stem[-1] == stem[-2] and stem[:-1] in BASE_VERBS:
            return stem[:-1]
        # unknown verb: prefer the bare stem, restoring a doubled consonant
        if len(stem) > 2 and stem[-1] == stem[-2] and stem[-1] not in "aeilosu":
            return stem[:-1]
        return stem
    return None


def classify_verb(token: str) -> tuple[str, str] | None:
    """Return (lemma, form) for a verb-looking token core, else None.

    form is one of "base", "3sg", "past". Base forms are recognized only
    from the known-verb list; inflected forms may come from the suffix
    heuristics, gated on the recovered lemma looking like a real verb.
    """
    core, _ = split_token(token)
    word = core.lower()
    if not word.isalpha():
        return None
    if word in BASE_VERBS:
        return word, "base"
    lemma = past_lemma(word)
    if lemma is not None and (word in IRREGULAR_PAST or word in _PAST_OVERRIDES or lemma in BASE_VERBS):
        return lemma, "past"
    lemma = third_person_lemma(word)
    if lemma is not None and (word in _THIRD_PERSON_OVERRIDES or lemma in BASE_VERBS):
        return lemma, "3sg"
    return None


def is_past_participle(token: str) -> bool:
    core, _ = split_token(token)
    word = core.lower()
    if word in IRREGULAR_PARTICIPLES or word in IRREGULAR_PAST:
        return True
    return len(word) > 3 and word.endswith("ed")


def stem(token: str) -> str:
    """Normalize a token for bag-of-words overlap: lowercase, de-inflect."""
    core, _ = split_token(token)
    word = core.lower().lstrip("\"'([{")
    if word.endswith("'s"):
        word = word[:-2]
    classified = classify_verb(word)
    if classified is not None:
        return classified[0]
    if len(word) > 3 and word.endswith("s") and not word.endswith("ss"):
        singular = third_person_lemma(word)
        if singular:
            return singular
    return word
