"""Regenerate the bundled fixtures under src/entropy_rag/fixtures/.

Twenty fictional documents, one question each. Twelve questions are
answerable from the extractive summary, and the scripted model answers
them confidently from the first-pass prompt. The other eight ask about a
sentence outside the summary: the first pass produces a spread-out wrong
guess, and only a prompt containing the detail sentence yields the answer.

Run from the repository root:  python scripts/build_fixtures.py
"""

from __future__ import annotations

import json
import math
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "src" / "entropy_rag" / "fixtures"

FILLER = ["it", "the", "unknown", "of", "in", "a", "was", "and", "for", "not", "by", "on", "to", "its"]

# kind "summary": `phrase` sits in the first two sentences.
# kind "detail": `phrase` sits later; `guess` is the first-pass wrong answer,
#                keyed on `summary_phrase`.
DOCS = [
    dict(
        id="doc01", kind="summary", title="Harlow Bay",
        text=(
            "Harlow Bay is a fishing town on the northern coast of Veltria. "
            "The town was founded in 1642 by the navigator Odran Pell. "
            "Its harbor shelters a fleet of roughly forty trawlers. "
            "A stone lighthouse guards the eastern breakwater."
        ),
        question="Who founded Harlow Bay?",
        answers=["Odran Pell", "the navigator Odran Pell"],
        phrase="founded in 1642 by the navigator Odran Pell",
        answer_tokens=["Odran", " Pell"], top=[0.93, 0.97],
    ),
    dict(
        id="doc02", kind="detail", title="Corvin Tower clock",
        text=(
            "The Corvin Tower clock is a mechanical clock in the city of Lisk. "
            "It was commissioned by the merchant guild to mark the opening of the river market. "
            "The clock face is painted deep blue and carries gilded numerals. "
            "Its movement contains exactly 417 brass gears, each cut by hand. "
            "Restoration work in the last century replaced only the winding drum."
        ),
        question="How many brass gears does the Corvin Tower clock movement contain?",
        answers=["417", "exactly 417"],
        phrase="exactly 417 brass gears",
        summary_phrase="commissioned by the merchant guild",
        answer_tokens=["417"], top=[0.95],
        guess=["about", " 200"], guess_top=[0.24, 0.2],
    ),
    dict(
        id="doc03", kind="summary", title="Senna orchid",
        text=(
            "The Senna orchid is a flowering plant native to the cloud forests of Tavel. "
            "Its petals are a pale violet that darkens to indigo at the edges. "
            "The plant blooms only during the second wet season. "
            "Collectors prize it for its faint scent of cedar."
        ),
        question="What color are the petals of the Senna orchid?",
        answers=["pale violet", "violet"],
        phrase="petals are a pale violet",
        answer_tokens=["pale", " violet"], top=[0.88, 0.94],
    ),
    dict(
        id="doc04", kind="summary", title="Quorra river",
        text=(
            "The Quorra is the longest river in the province of Dremmin. "
            "It rises in the Ash Hills and flows into Lake Ombre. "
            "Barges carried timber along its lower reaches for two centuries. "
            "Today the river is popular with rowing clubs."
        ),
        question="Into which lake does the Quorra flow?",
        answers=["Lake Ombre", "Ombre"],
        phrase="flows into Lake Ombre",
        answer_tokens=["Lake", " Ombre"], top=[0.9, 0.96],
    ),
    dict(
        id="doc05", kind="detail", title="Ferrow engine",
        text=(
            "The Ferrow engine was an early steam engine built for draining coal mines in the Kesh valley. "
            "Its design relied on a single large cylinder and a wooden beam that rocked above the shaft. "
            "Mine owners adopted it quickly because it could run on the poor coal that the pits produced. "
            "Engineers from neighbouring regions travelled to the valley to copy the layout, and "
            "several variants appeared within a decade. Some of these variants used iron beams, while "
            "others kept the original oak timber because it absorbed vibration better.\n\n"
            "Maintenance of the engine was a constant task for the crews who tended it. "
            "The boiler needed cleaning every few weeks and the valves wore quickly. "
            "Records kept by the Kesh colliery show that the largest Ferrow engine lifted 9,300 gallons "
            "of water per hour from a depth of sixty fathoms. That figure remained the regional record "
            "for nearly thirty years, until condensing engines replaced the older machines. Several "
            "engine houses survive as ruins, and one has been restored as a museum with a working "
            "replica of the beam and pump rods."
        ),
        question="How many gallons of water per hour did the largest Ferrow engine lift?",
        answers=["9,300", "9,300 gallons", "9300"],
        phrase="lifted 9,300 gallons",
        summary_phrase="draining coal mines in the Kesh valley",
        answer_tokens=["9,300"], top=[0.92],
        guess=["several", " thousand"], guess_top=[0.18, 0.22],
    ),
    dict(
        id="doc06", kind="summary", title="Mirel festival",
        text=(
            "The Mirel festival is held every autumn in the hill town of Ostra. "
            "Its central event is a lantern procession across the old stone bridge. "
            "Visitors also attend music contests and a harvest market."
        ),
        question="What is the central event of the Mirel festival?",
        answers=["a lantern procession", "lantern procession"],
        phrase="central event is a lantern procession",
        answer_tokens=["a", " lantern", " procession"], top=[0.8, 0.93, 0.95],
    ),
    dict(
        id="doc07", kind="detail", title="Gannet Observatory",
        text=(
            "Gannet Observatory is a research station on the summit of Mount Ilve. "
            "It studies variable stars and the dust clouds of the southern sky. "
            "The main dome houses a reflecting telescope with a mirror 2.4 meters across. "
            "A smaller dome is reserved for student training."
        ),
        question="How wide is the mirror of the main telescope at Gannet Observatory?",
        answers=["2.4 meters", "2.4 meters across", "2.4"],
        phrase="mirror 2.4 meters across",
        summary_phrase="studies variable stars",
        answer_tokens=["2.4", " meters"], top=[0.9, 0.97],
        guess=["one", " meter"], guess_top=[0.2, 0.3],
    ),
    dict(
        id="doc08", kind="summary", title="Tobin Hale",
        text=(
            "Tobin Hale was a cartographer who mapped the Serrat archipelago. "
            "He spent eleven years charting its reefs from a small sloop named Wren. "
            "His charts were used by pilots until the age of satellite navigation."
        ),
        question="What was the name of Tobin Hale's sloop?",
        answers=["Wren", "the Wren"],
        phrase="small sloop named Wren",
        answer_tokens=["Wren"], top=[0.91],
    ),
    dict(
        id="doc09", kind="summary", title="Brask cheese",
        text=(
            "Brask is a hard cheese made from sheep's milk in the Lorren highlands. "
            "It is aged for at least eighteen months in limestone caves. "
            "The rind is rubbed with ash to keep moisture in."
        ),
        question="What milk is Brask cheese made from?",
        answers=["sheep's milk", "sheep milk"],
        phrase="made from sheep's milk",
        answer_tokens=["sheep's", " milk"], top=[0.87, 0.96],
    ),
    dict(
        id="doc10", kind="detail", title="Vallen canal",
        text=(
            "The Vallen canal links the port of Saldo with the inland city of Merrit. "
            "Construction was financed by a consortium of grain traders who wanted cheaper transport. "
            "Work began in a dry summer, and the first section opened within three years. "
            "Locks were built from granite quarried in the northern hills, and towpaths were laid "
            "on both banks so that horses could pull barges in either direction. Villages along "
            "the route grew rapidly as inns, stables, and warehouses appeared near each lock.\n\n"
            "The canal remained busy for most of the following century. "
            "Railways eventually took much of its freight, but pleasure boats kept it open. "
            "In total the canal climbs through 23 locks between the coast and Merrit, and the "
            "steepest flight of six locks is known locally as the Ladder. Volunteers now maintain "
            "the lock gates, and a heritage trust organizes an annual boat parade each spring along "
            "the whole length of the waterway."
        ),
        question="How many locks does the Vallen canal climb through?",
        answers=["23", "23 locks"],
        phrase="climbs through 23 locks",
        summary_phrase="consortium of grain traders",
        answer_tokens=["23"], top=[0.94],
        guess=["about", " ten"], guess_top=[0.22, 0.16],
    ),
    dict(
        id="doc11", kind="summary", title="Ellis Varn",
        text=(
            "Ellis Varn is a composer known for choral works written for cathedral acoustics. "
            "Her best known piece is the Requiem of Glass, first performed in Tamsford. "
            "She later taught composition at the Royal Conservatory."
        ),
        question="What is Ellis Varn's best known piece?",
        answers=["the Requiem of Glass", "Requiem of Glass"],
        phrase="best known piece is the Requiem of Glass",
        answer_tokens=["the", " Requiem", " of", " Glass"], top=[0.82, 0.9, 0.97, 0.97],
    ),
    dict(
        id="doc12", kind="detail", title="Pellam bridge",
        text=(
            "The Pellam bridge crosses the Arno gorge near the village of Tresk. "
            "It replaced a rope bridge that had washed away in a flood. "
            "The central arch spans 96 meters without intermediate supports. "
            "Carts crossed it for the first time during the spring fair."
        ),
        question="How long is the central arch span of the Pellam bridge?",
        answers=["96 meters", "96"],
        phrase="arch spans 96 meters",
        summary_phrase="replaced a rope bridge",
        answer_tokens=["96", " meters"], top=[0.93, 0.97],
        guess=["fifty", " meters"], guess_top=[0.25, 0.35],
    ),
    dict(
        id="doc13", kind="summary", title="Lumen beetle",
        text=(
            "The lumen beetle is an insect that glows green during its mating season. "
            "It lives under the bark of fallen alder trees in wet lowland forests. "
            "Larvae feed on fungi for two years before pupating."
        ),
        question="What color does the lumen beetle glow?",
        answers=["green"],
        phrase="glows green",
        answer_tokens=["green"], top=[0.89],
    ),
    dict(
        id="doc14", kind="summary", title="Dorrin Academy",
        text=(
            "Dorrin Academy is a naval school located in the port city of Calvane. "
            "It was established by royal charter in 1788. "
            "Cadets spend their final year at sea aboard a training frigate."
        ),
        question="In which city is Dorrin Academy located?",
        answers=["Calvane"],
        phrase="port city of Calvane",
        answer_tokens=["Calvane"], top=[0.92],
    ),
    dict(
        id="doc15", kind="detail", title="Orsk glacier",
        text=(
            "The Orsk glacier descends from the ice cap of the Hemmel range toward the Cold Sea. "
            "Scientists have monitored its front since the first survey expedition reached the valley. "
            "Early measurements were made with chains and theodolites, and later surveys used aerial "
            "photographs taken from light aircraft. The glacier carves a deep U-shaped trough and "
            "leaves long moraines along the valley sides, where hardy grasses take root in summer.\n\n"
            "Meltwater from the front feeds a braided river that shifts its channels every season. "
            "Researchers record the thickness of the ice with radar flown along fixed lines. "
            "Recent satellite measurements show that the glacier front retreated 1.8 kilometers "
            "between the two most recent surveys, and the results are compared with snowfall records "
            "kept at a hut near the ice cap. The station staff publish a yearly bulletin for "
            "mountaineers and shepherds who use the valley."
        ),
        question="How far did the Orsk glacier front retreat between the two most recent surveys?",
        answers=["1.8 kilometers", "1.8 km", "1.8"],
        phrase="retreated 1.8 kilometers",
        summary_phrase="ice cap of the Hemmel range",
        answer_tokens=["1.8", " kilometers"], top=[0.91, 0.96],
        guess=["several", " meters"], guess_top=[0.2, 0.25],
    ),
    dict(
        id="doc16", kind="summary", title="Kestle wool",
        text=(
            "Kestle wool comes from a breed of long-haired goats raised on the Sarn plateau. "
            "The fibre is spun by hand into yarn used for winter shawls. "
            "Dyers favour madder and walnut husk for colour."
        ),
        question="What animal does Kestle wool come from?",
        answers=["goats", "long-haired goats"],
        phrase="breed of long-haired goats",
        answer_tokens=["long-haired", " goats"], top=[0.85, 0.95],
    ),
    dict(
        id="doc17", kind="detail", title="Amberlyn library",
        text=(
            "The Amberlyn library is a public library in the market town of Hessle. "
            "It began as a reading room above a bakery. "
            "Its collection now holds 62,000 volumes, including a rare set of river charts. "
            "A children's wing opened in the new century."
        ),
        question="How many volumes does the Amberlyn library collection hold?",
        answers=["62,000", "62,000 volumes", "62000"],
        phrase="holds 62,000 volumes",
        summary_phrase="reading room above a bakery",
        answer_tokens=["62,000"], top=[0.93],
        guess=["thousands", " of"], guess_top=[0.21, 0.19],
    ),
    dict(
        id="doc18", kind="summary", title="Tressel pass",
        text=(
            "Tressel pass is a mountain pass that connects the valleys of Ord and Minna. "
            "Its highest point lies at 2,310 meters above sea level. "
            "The pass is usually closed by snow from November to May."
        ),
        question="What valleys does Tressel pass connect?",
        answers=["Ord and Minna", "the valleys of Ord and Minna"],
        phrase="connects the valleys of Ord and Minna",
        answer_tokens=["Ord", " and", " Minna"], top=[0.86, 0.97, 0.95],
    ),
    dict(
        id="doc19", kind="summary", title="Calder loom",
        text=(
            "The Calder loom is a hand loom invented by the weaver Mara Quell. "
            "It allowed a single weaver to produce patterned cloth twice as fast as before. "
            "Workshops across the region adopted it within a generation."
        ),
        question="Who invented the Calder loom?",
        answers=["Mara Quell", "the weaver Mara Quell"],
        phrase="invented by the weaver Mara Quell",
        answer_tokens=["Mara", " Quell"], top=[0.9, 0.98],
    ),
    dict(
        id="doc20", kind="detail", title="Sorrel lighthouse",
        text=(
            "The Sorrel lighthouse marks the reef at the entrance to the Bay of Tarn. "
            "Keepers lived on the rock in a cottage attached to the tower. "
            "Supplies arrived by boat when the weather allowed, and in winter the keepers could be "
            "cut off for weeks. Logbooks preserved from the station describe storms, shipwrecks, "
            "and the slow work of keeping the lamp clean and the clockwork turning.\n\n"
            "The lamp was later converted to electricity and the last keepers left the rock. "
            "Automation brought a new optic and a fog signal. "
            "Under clear skies the light is visible from 27 nautical miles away, making it one of "
            "the most powerful lights on the coast. Birdwatchers visit the rock in late summer to "
            "count the colonies of terns that nest among the old walls, and a small exhibition in "
            "the harbor town tells the story of the keepers and their families."
        ),
        question="From how many nautical miles away is the Sorrel lighthouse visible?",
        answers=["27", "27 nautical miles"],
        phrase="visible from 27 nautical miles",
        summary_phrase="reef at the entrance to the Bay of Tarn",
        answer_tokens=["27"], top=[0.96],
        guess=["ten", " miles"], guess_top=[0.23, 0.3],
    ),
]


def step(token: str, top: float, n_alternatives: int, offset: int) -> dict:
    """One scripted step: ``token`` gets ``top``, the rest is split evenly."""
    alts = [w for w in FILLER if w != token.strip()]
    alts = (alts[offset % len(alts):] + alts[: offset % len(alts)])[:n_alternatives]
    rest = (1.0 - top) / n_alternatives
    probs = {token: top}
    for a in alts:
        probs[a] = rest
    # absorb rounding so the listed mass is exactly representable as ~1
    probs[alts[-1]] = 1.0 - top - rest * (n_alternatives - 1)
    return {"token": token, "probs": probs}


def steps_for(tokens: list[str], tops: list[float], n_alternatives: int, seed: int) -> list[dict]:
    return [step(t, p, n_alternatives, seed + i) for i, (t, p) in enumerate(zip(tokens, tops))]


def entropy(probs: dict[str, float]) -> float:
    return -sum(p * math.log(p) for p in probs.values() if p > 0)


def check() -> None:
    """Assert each scripted phrase lands where the fixture design needs it."""
    from entropy_rag.corpus import Document, summarize

    for d in DOCS:
        summary = summarize(Document(d["id"], d["text"])).text
        others = [o["text"] for o in DOCS if o is not d]
        assert not any(d["phrase"] in t for t in others), d["id"]
        if d["kind"] == "summary":
            assert d["phrase"] in summary, d["id"]
        else:
            assert d["phrase"] not in summary, d["id"]
            assert d["summary_phrase"] in summary, d["id"]
            assert not any(d["summary_phrase"] in t for t in others), d["id"]


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    detail_rules, summary_rules = [], []
    for i, d in enumerate(DOCS):
        correct = {"pattern": d["phrase"], "steps": steps_for(d["answer_tokens"], d["top"], 3, i)}
        if d["kind"] == "detail":
            detail_rules.append(correct)
            guess = {"pattern": d["summary_phrase"], "steps": steps_for(d["guess"], d["guess_top"], 12, i)}
            summary_rules.append(guess)
        else:
            summary_rules.append(correct)
    default = {"steps": steps_for(["unknown"], [0.2], 12, 0)}
    # rules keyed on detail sentences come first so a prompt carrying a
    # retrieved chunk wins over the summary-only guess for the same document
    script = {"rules": detail_rules + summary_rules, "default": default}
    (OUT / "mock_script.json").write_text(json.dumps(script, indent=2) + "\n", encoding="utf-8")

    with (OUT / "corpus.jsonl").open("w", encoding="utf-8", newline="\n") as fh:
        for d in DOCS:
            fh.write(json.dumps({"id": d["id"], "title": d["title"], "text": d["text"]}) + "\n")

    dataset = [
        {"id": f"q{i + 1:02d}", "doc_id": d["id"], "question": d["question"], "context": d["text"], "answers": d["answers"]}
        for i, d in enumerate(DOCS)
    ]
    (OUT / "dataset.json").write_text(json.dumps(dataset, indent=2) + "\n", encoding="utf-8")

    check()
    print(f"wrote {len(DOCS)} documents, {len(script['rules'])} rules to {OUT}")


if __name__ == "__main__":
    main()
