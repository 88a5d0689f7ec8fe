#!/usr/bin/env python3
"""Regenerates data/demo.spec.json, data/negatives.txt and data/registry.json."""
import json
import random
from pathlib import Path

DATA = Path(__file__).resolve().parent.parent / "data"
rng = random.Random(20180801)

TICKERS = ["TSLA", "AAPL", "MSFT", "GOOG", "AMZN", "NFLX", "NVDA", "IBM", "ORCL", "INTC",
           "AMD", "META", "JPM", "GS", "BAC", "XOM", "KO", "DIS", "BA", "SPY", "QQQ"]
PAIRS = ["EURUSD", "GBPUSD", "USDJPY", "AUDUSD", "USDCHF", "USDCAD", "NZDUSD", "EURGBP",
         "EURJPY", "BTCUSD", "ETHUSD", "XAUUSD"]
COMPANIES = {"Tesla": "TSLA", "Apple": "AAPL", "Microsoft": "MSFT", "Google": "GOOG",
             "Alphabet": "GOOG", "Amazon": "AMZN", "Netflix": "NFLX", "Nvidia": "NVDA",
             "Oracle": "ORCL", "Intel": "INTC", "Facebook": "META", "JPMorgan": "JPM",
             "Goldman Sachs": "GS", "Bank of America": "BAC", "Exxon": "XOM",
             "Coca Cola": "KO", "Disney": "DIS", "Boeing": "BA"}
INDICATORS = ["RSI", "MACD", "Bollinger Bands", "Moving Average", "EMA", "SMA", "Stochastic",
              "VWAP", "ATR", "Ichimoku", "ADX", "Parabolic SAR", "Volume", "OBV", "CCI"]
TOPICS = ["earnings", "crypto", "inflation", "interest rates", "oil", "forex", "tech",
          "elections", "ipo", "mergers", "the fed", "employment", "housing", "gold",
          "central banks", "brexit", "trade war", "dividends", "bonds", "commodities"]
TIMEFRAMES = ["1m", "5m", "15m", "30m", "1h", "4h", "daily", "weekly", "monthly", "1d", "1w"]
FILLERS = ["please", "now", "hey", "pls", "thanks", "ok", "kindly", "asap", "quickly",
           "plz", "then", "just", "so", "right"]


def lower_variants(names):
    out = []
    for n in names:
        out.append(n)
        out.append(n.lower())
    return out


def quantities():
    # Every small count plus round lots; desk orders are mostly small.
    small = [str(n) for n in range(1, 31)]
    lots = [40, 60, 75, 80, 100, 120, 150, 200, 250, 300, 400, 500, 750, 1000, 1500, 2000, 2500, 3000, 5000, 10000]
    return small + [str(n) for n in lots]


def prices():
    ps = set()
    while len(ps) < 240:
        r = rng.random()
        if r < 0.35:
            ps.add(f"{rng.uniform(1, 500):.1f}")
        elif r < 0.65:
            ps.add(f"{rng.uniform(1, 1500):.2f}")
        elif r < 0.85:
            ps.add(f"{rng.uniform(0.5, 2):.4f}")
        else:
            ps.add(str(rng.randint(1, 999)))
    return sorted(ps, key=float)


def w(tag, words):
    return " ".join(f"{{={tag}:{x}}}" for x in words.split())


def templates():
    out = []

    def add(intent, pattern):
        out.append({"intent": intent, "pattern": pattern})

    buy_verbs = ["buy", "purchase", "go long", "long", "get me", "acquire", "pick up", "grab"]
    sell_verbs = ["sell", "dump", "go short", "short", "unload", "offload", "get rid of", "liquidate"]
    for intent, verbs in (("BUY", buy_verbs), ("SELL", sell_verbs)):
        tag = intent
        shapes = [
            "{v} {QUANTITY} {INSTRUMENT}",
            "{v} {QUANTITY} @ {PRICE} {INSTRUMENT}",
            "{v} {QUANTITY} {INSTRUMENT} at {PRICE}",
            "{v} {QUANTITY} {INSTRUMENT} @ {PRICE}",
            "{v} {QUANTITY} shares of {COMPANY}",
            "{v} {QUANTITY} {COMPANY} at {PRICE}",
            "{v} {QUANTITY} of {INSTRUMENT} for {PRICE}",
        ]
        for k, v in enumerate(verbs):
            for s in shapes[k % 3::3] + ([shapes[1]] if k < 3 else []):
                add(intent, s.replace("{v}", w(tag, v)))
        for s in ["i want to {v} {QUANTITY} {INSTRUMENT}",
                  "i would like to {v} {QUANTITY} shares of {COMPANY}",
                  "can you {v} {QUANTITY} {INSTRUMENT} at {PRICE}",
                  "place an order to {v} {QUANTITY} {INSTRUMENT}",
                  "{v} {INSTRUMENT} {QUANTITY} units",
                  "{v} {INSTRUMENT} x{QUANTITY} @ {PRICE}",
                  "{QUANTITY} {INSTRUMENT} {v}",
                  "{v} {QUANTITY} {INSTRUMENT} limit {PRICE}"]:
            add(intent, s.replace("{v}", w(tag, verbs[0])))

    for v in ["open", "show", "display", "pull up", "bring up", "load", "chart", "view"]:
        add("OPEN_CHART", f"{w('OPEN', v)} {{INSTRUMENT}}")
        add("OPEN_CHART", f"{w('OPEN', v)} {{INSTRUMENT}} chart")
        add("OPEN_CHART", f"{w('OPEN', v)} the {{COMPANY}} chart")
    for s in ["{o} a chart for {INSTRUMENT}", "{o} {INSTRUMENT} on {TIMEFRAME}",
              "{o} {INSTRUMENT} {TIMEFRAME} chart", "can you {o} {INSTRUMENT}",
              "i want to see {INSTRUMENT}", "{o} chart of {COMPANY}", "{o} {INSTRUMENT} please"]:
        add("OPEN_CHART", s.replace("{o}", w("OPEN", "open")))

    for v in ["close", "hide", "remove", "kill", "shut", "get rid of", "dismiss", "drop"]:
        add("CLOSE_CHART", f"{w('CLOSE', v)} {{INSTRUMENT}}")
        add("CLOSE_CHART", f"{w('CLOSE', v)} the {{INSTRUMENT}} chart")
        add("CLOSE_CHART", f"{w('CLOSE', v)} {{COMPANY}} chart")
    for s in ["{c} chart {INSTRUMENT}", "please {c} {INSTRUMENT}", "{c} the chart for {INSTRUMENT}",
              "i am done with {INSTRUMENT} {c} it", "{c} {INSTRUMENT} window"]:
        add("CLOSE_CHART", s.replace("{c}", w("CLOSE", "close")))

    for v in ["add", "show", "plot", "overlay", "put", "apply", "insert", "draw"]:
        add("ADD_INDICATOR", f"{w('ADD', v)} {{INDICATOR}}")
        add("ADD_INDICATOR", f"{w('ADD', v)} {{INDICATOR}} to {{INSTRUMENT}}")
        add("ADD_INDICATOR", f"{w('ADD', v)} {{INDICATOR}} on {{INSTRUMENT}}")
    for s in ["{a} {INDICATOR} {NUMBER}", "{a} {INDICATOR} {NUMBER} on {INSTRUMENT}",
              "{a} the {INDICATOR} indicator", "{a} {INDICATOR} to the {INSTRUMENT} chart",
              "can you {a} {INDICATOR}", "{a} {INDICATOR} with period {NUMBER}"]:
        add("ADD_INDICATOR", s.replace("{a}", w("ADD", "add")))

    for v in ["remove", "delete", "hide", "drop", "take off", "clear", "get rid of", "strip"]:
        add("REMOVE_INDICATOR", f"{w('REMOVE', v)} {{INDICATOR}}")
        add("REMOVE_INDICATOR", f"{w('REMOVE', v)} {{INDICATOR}} from {{INSTRUMENT}}")
        add("REMOVE_INDICATOR", f"{w('REMOVE', v)} the {{INDICATOR}} indicator")
    for s in ["{r} {INDICATOR} on {INSTRUMENT}", "please {r} {INDICATOR}",
              "{r} the {INDICATOR} from the {INSTRUMENT} chart", "no more {INDICATOR} {r} it",
              "{r} {INDICATOR} {NUMBER}"]:
        add("REMOVE_INDICATOR", s.replace("{r}", w("REMOVE", "remove")))

    for v in ["filter", "show", "only show", "find", "search", "get", "fetch", "give me"]:
        add("FILTER_NEWS", f"{w('FILTER', v)} news about {{NEWS_TOPIC}}")
        add("FILTER_NEWS", f"{w('FILTER', v)} {{COMPANY}} news")
        add("FILTER_NEWS", f"{w('FILTER', v)} {{NEWS_TOPIC}} news")
    for s in ["{f} news on {COMPANY}", "{f} news by {NEWS_TOPIC}", "any news about {COMPANY}",
              "{f} headlines about {NEWS_TOPIC}", "what is new with {COMPANY}",
              "{f} the news for {NEWS_TOPIC}"]:
        add("FILTER_NEWS", s.replace("{f}", w("FILTER", "filter")))

    for s in ["hello", "hi there", "how are you", "thank you", "what can you do", "good morning",
              "who are you", "help", "never mind", "that is all for today"]:
        add("NONE", s)
    return out


def negatives():
    subjects = ["the weather", "my cat", "our team", "the train", "this recipe", "the movie",
                "my neighbour", "the garden", "the concert", "her sister", "the museum", "the bakery",
                "his bicycle", "the library", "the new phone", "the river", "our holiday",
                "the football match", "the printer", "the coffee machine", "my laptop", "the bus"]
    verbs = ["was", "seems", "looked", "felt", "became", "is", "will be", "remains"]
    complements = ["quite nice", "far too long", "a bit strange", "really loud", "surprisingly good",
                   "late again", "very crowded", "completely broken", "lovely in spring",
                   "hard to find", "cheaper than expected", "full of people", "rather boring",
                   "worth the trip", "closed on sunday"]
    tails = ["", "today", "yesterday", "this morning", "last week", "again", "after lunch",
             "according to everyone", "as usual", "for some reason"]
    questions = ["where did you park the car", "what time does the shop close",
                 "do you like pizza", "how was your weekend", "can we meet tomorrow",
                 "is it going to rain", "who wrote this book", "why is the sky blue",
                 "have you seen my keys", "which bus goes downtown", "what is your favourite song",
                 "how do i bake bread", "when is the next holiday", "did you water the plants",
                 "should i bring an umbrella", "where is the nearest pharmacy"]
    shorts = ["good night", "see you later", "nice to meet you", "i am hungry", "it is cold",
              "lol", "ok cool", "sounds good", "no way", "maybe later", "what a day",
              "happy birthday", "congratulations", "sorry about that", "not sure"]
    lines = set(questions) | set(shorts)
    while len(lines) < 420:
        parts = [rng.choice(subjects), rng.choice(verbs), rng.choice(complements), rng.choice(tails)]
        s = " ".join(p for p in parts if p)
        if rng.random() < 0.3:
            s += " and " + rng.choice(subjects) + " " + rng.choice(verbs) + " " + rng.choice(complements)
        lines.add(s)
    out = sorted(lines)
    rng.shuffle(out)
    return out


def main():
    spec = {
        "lexicons": {
            "INSTRUMENT": lower_variants(TICKERS + PAIRS),
            "COMPANY": lower_variants(list(COMPANIES)),
            "INDICATOR": lower_variants(INDICATORS),
            "NEWS_TOPIC": TOPICS,
            "TIMEFRAME": TIMEFRAMES,
            "QUANTITY": quantities(),
            "PRICE": prices(),
            "NUMBER": [str(n) for n in (5, 7, 9, 10, 12, 14, 20, 21, 26, 30, 50, 100, 200)],
            "FILLER": FILLERS,
        },
        "templates": templates(),
        "noise": {"swap_prob": 0.04, "drop_prob": 0.02, "filler_prob": 0.06, "filler_lexicon": "FILLER"},
        "negatives": {"path": "negatives.txt", "count": 400},
    }
    (DATA / "demo.spec.json").write_text(json.dumps(spec, indent=1) + "\n")
    (DATA / "negatives.txt").write_text("\n".join(negatives()) + "\n")
    registry = {
        "indicators": INDICATORS,
        "tickers": TICKERS + PAIRS,
        "companies": COMPANIES,
        "max_distance": None,
    }
    (DATA / "registry.json").write_text(json.dumps(registry, indent=1) + "\n")
    print(len(spec["templates"]), "templates")


if __name__ == "__main__":
    main()
