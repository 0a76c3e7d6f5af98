#!/usr/bin/env python3
"""Regenerates the bundled synthetic rumour corpora and Brown cluster file.

Output is fully determined by the seed, so the committed files can be
checked with `python3 tools/make_synthetic.py --check`.
"""
import argparse
import json
import random
import sys
from pathlib import Path

CUES = {
    "supporting": [
        ["confirmed", "confirms", "verified", "official", "witnesses", "footage"],
        ["happening", "breaking", "video", "pictures", "indeed", "reporting"],
    ],
    "denying": [
        ["fake", "hoax", "false", "debunked", "untrue", "photoshopped"],
        ["nonsense", "lies", "rubbish", "denied", "myth", "bogus"],
    ],
    "questioning": [
        ["really", "anyone", "seriously", "wonder", "verify", "proof"],
        ["?", "??", "whether", "unsure", "doubt", "possible"],
    ],
}

RUMOURS = [
    ("r1-eye-fire", "london", ["eye", "fire", "burning", "smoke", "wheel"]),
    ("r2-zoo", "london", ["zoo", "tigers", "loose", "animals", "escaped"]),
    ("r3-army", "manchester", ["army", "deployed", "soldiers", "streets", "troops"]),
    ("r4-diner", "birmingham", ["diner", "kitchen", "staff", "burgers", "cooking"]),
    ("r5-hospital", "birmingham", ["hospital", "attacked", "children", "ward", "nurses"]),
    ("r6-police", "liverpool", ["police", "beat", "girl", "officers", "teenager"]),
    ("r7-bank", "bristol", ["bank", "robbed", "cash", "vault", "branch"]),
]

FILLER = [
    ["omg", "wow", "crazy", "mad", "insane"],
    ["people", "everyone", "city", "tonight", "today"],
    ["news", "look", "scene", "town", "world"],
    ["smile", "sad", "laugh", "wink", "skeptical", "confused", "surprise", "angry"],
]

EMOTICONS = [":)", ":(", ":D", ";)", ":/", ":S", ":o", ">:("]
USERS = ["@bbcnews", "@metpolice", "@jo_smith", "@riotwatch", "@user42", "@citydesk"]

# Zero denying tweets in this rumour.
NO_DENY = "r4-diner"


def stance_mix(rumour):
    if rumour == NO_DENY:
        return {"supporting": 0.72, "denying": 0.0, "questioning": 0.28}
    return {"supporting": 0.55, "denying": 0.2, "questioning": 0.25}


def elongate(rng, word):
    if len(word) > 2 and word.isalpha() and rng.random() < 0.08:
        return word + word[-1] * rng.randint(2, 4)
    return word


def make_text(rng, label, topic, separable):
    words = rng.sample(topic, 2)
    own = [w for group in CUES[label] for w in group]
    if separable:
        words += rng.sample(own, 2)
    else:
        roll = rng.random()
        if roll < 0.7:
            words += rng.sample(own, rng.randint(1, 2))
        elif roll < 0.85:
            other = rng.choice([s for s in CUES if s != label])
            words += [rng.choice(own), rng.choice([w for g in CUES[other] for w in g])]
        # else: no stance cue at all
    words += [rng.choice(rng.choice(FILLER[:3])) for _ in range(rng.randint(0, 2))]
    rng.shuffle(words)
    words = [elongate(rng, w) for w in words]
    if rng.random() < 0.3:
        words.insert(0, rng.choice(USERS))
    if rng.random() < 0.2:
        words.append(rng.choice(EMOTICONS))
    if rng.random() < 0.15:
        words.append("http://t.co/" + "".join(rng.choice("abcdefghjk0123456789") for _ in range(8)))
    if rng.random() < 0.3:
        words[rng.randrange(len(words))] = words[rng.randrange(len(words))].capitalize()
    text = " ".join(words)
    if label == "questioning" and rng.random() < 0.4 and not text.endswith("?"):
        text += "?"
    elif rng.random() < 0.2:
        text += "!"
    return text


def make_corpus(seed, separable):
    rng = random.Random(seed)
    rows = []
    next_id = 100000
    for rumour, event, topic in RUMOURS:
        size = rng.randint(56, 64)
        mix = stance_mix(rumour)
        tweets = []
        for order in range(size):
            if tweets and rng.random() < 0.1:
                source = rng.choice(tweets)
                text = "RT " + rng.choice(USERS) + ": " + source["text"]
                label, retweet = source["label"], True
            else:
                label = rng.choices(list(mix), weights=list(mix.values()))[0]
                text, retweet = make_text(rng, label, topic, separable), False
            tweets.append({
                "tweet_id": str(next_id),
                "text": text,
                "rumour_id": rumour,
                "event_id": event,
                "order_index": order,
                "label": label,
                "is_retweet": retweet,
            })
            next_id += rng.randint(1, 9)
        rows.extend(tweets)
    # Source order is not temporal order.
    rng.shuffle(rows)
    return rows


def brown_lines(seed):
    rng = random.Random(seed)
    groups = [g for stance in CUES.values() for g in stance]
    groups += [topic for _, _, topic in RUMOURS]
    groups += FILLER
    lines = []
    for c, words in enumerate(groups):
        bits = format(c + 2, "b")  # distinct, prefix-style paths
        for w in words:
            lines.append(f"{bits}\t{w}\t{rng.randint(5, 5000)}")
    return lines


def render(seed):
    out = {}
    for name, separable in (("rumours.jsonl", False), ("separable.jsonl", True)):
        rows = make_corpus(seed + (1 if separable else 0), separable)
        out[name] = "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows)
    out["brown_paths.txt"] = "\n".join(brown_lines(seed)) + "\n"
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=2016)
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "data" / "synthetic")
    ap.add_argument("--check", action="store_true", help="compare against existing files instead of writing")
    args = ap.parse_args()
    files = render(args.seed)
    if args.check:
        stale = [n for n, text in files.items() if (args.out / n).read_text() != text]
        for n in stale:
            print(f"stale: {n}", file=sys.stderr)
        return 1 if stale else 0
    args.out.mkdir(parents=True, exist_ok=True)
    for n, text in files.items():
        (args.out / n).write_text(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
