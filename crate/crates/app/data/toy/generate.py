"""Regenerate the bundled toy corpus: 50 abstracts across two review topics.

    python3 generate.py    # writes corpus.jsonl, topics.json, qrels.txt here
"""

import json
import random
from pathlib import Path

HERE = Path(__file__).resolve().parent

TOPICS = {
    "T1": {
        "population": ["adults with hypercholesterolemia", "patients with coronary heart disease (CHD)",
                       "older adults at high cardiovascular risk"],
        "intervention": ["statin therapy", "atorvastatin", "rosuvastatin"],
        "comparator": ["placebo", "usual care", "dietary advice"],
        "outcome": ["major cardiovascular events", "myocardial infarction", "all-cause mortality",
                    "LDL cholesterol reduction"],
        "off_population": ["healthy volunteers", "patients with chronic kidney disease", "children with obesity"],
        "off_intervention": ["fish oil supplements", "exercise training", "aspirin"],
        "keywords": ["Hydroxymethylglutaryl-CoA Reductase Inhibitors", "Cardiovascular Diseases", "Cholesterol"],
    },
    "T2": {
        "population": ["children with persistent asthma", "school-age children with asthma",
                       "preschool children with recurrent wheeze"],
        "intervention": ["inhaled corticosteroids (ICS)", "budesonide", "fluticasone"],
        "comparator": ["placebo", "montelukast", "as-needed salbutamol"],
        "outcome": ["asthma exacerbations", "lung function", "growth velocity", "symptom-free days"],
        "off_population": ["adults with chronic obstructive pulmonary disease", "infants with bronchiolitis",
                           "adolescents with allergic rhinitis"],
        "off_intervention": ["antibiotics", "nasal saline", "vitamin D supplements"],
        "keywords": ["Asthma", "Adrenal Cortex Hormones", "Child"],
    },
}

DESIGNS = ["a randomized controlled trial", "a double-blind multicentre trial", "a cohort study",
           "a pragmatic trial", "a cross-sectional survey"]


def sentence_block(rng, pop, intv, comp, outc, design):
    n = rng.randint(40, 900)
    pct = round(rng.uniform(5, 45), 1)
    months = rng.choice([6, 12, 24, 36])
    return [
        f"We conducted {design} in {n} {pop}.",
        f"Participants received {intv} or {comp} for {months} months.",
        f"The primary outcome was {outc}.",
        f"{intv.capitalize()} reduced {outc} by {pct}% compared with {comp}.",
        f"Adverse events were similar between groups and {rng.choice(['no', 'few', 'rare'])} serious events occurred.",
    ]


def make_doc(rng, doc_id, topic, relevant):
    t = TOPICS[topic]
    if relevant:
        pop = rng.choice(t["population"])
        intv = rng.choice(t["intervention"])
        design = rng.choice(DESIGNS[:4])
    else:
        # Either the population or the intervention is off-topic.
        if rng.random() < 0.5:
            pop, intv = rng.choice(t["off_population"]), rng.choice(t["intervention"])
        else:
            pop, intv = rng.choice(t["population"]), rng.choice(t["off_intervention"])
        design = rng.choice(DESIGNS)
    comp = rng.choice(t["comparator"])
    outc = rng.choice(t["outcome"])
    sentences = sentence_block(rng, pop, intv, comp, outc, design)
    title = f"{intv.capitalize()} versus {comp} for {outc} in {pop}"
    return {
        "doc_id": doc_id,
        "title": title,
        "abstract": " ".join(sentences),
        "keywords": rng.sample(t["keywords"], 2),
    }


def main():
    rng = random.Random(2019)
    docs, topics, qrels = [], [], []
    for topic, n_rel in (("T1", 7), ("T2", 6)):
        labels = [True] * n_rel + [False] * (25 - n_rel)
        rng.shuffle(labels)
        ids = []
        for i, rel in enumerate(labels):
            doc_id = f"{topic}-{i + 1:03d}"
            docs.append(make_doc(rng, doc_id, topic, rel))
            ids.append(doc_id)
            qrels.append(f"{topic} 0 {doc_id} {1 if rel else 0}")
        topics.append({"sr_id": topic, "candidates": ids})

    with open(HERE / "corpus.jsonl", "w") as f:
        for d in docs:
            f.write(json.dumps(d) + "\n")
    with open(HERE / "topics.json", "w") as f:
        json.dump(topics, f, indent=2)
        f.write("\n")
    with open(HERE / "qrels.txt", "w") as f:
        f.write("\n".join(qrels) + "\n")


if __name__ == "__main__":
    main()
