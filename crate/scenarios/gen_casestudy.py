"""Writes casestudy.json: two districts, two hospitals, hierarchical ICT,
an epidemic seeded at day 0 and a cyberattack on the center node at day 20."""

import json
import sys

P = dict(
    citizens={"center": 300, "outskirts": 200},
    beta=0.014,
    k=3.0,
    mild_ticks=120.0,
    severe_ticks=120.0,
    critical_ticks=96.0,
    p_severe=0.5,
    p_critical=0.4,
    p_die_treated=0.15,
    p_die_untreated=0.8,
    beds={"hosp-center": (24, 5), "hosp-outskirts": (10, 2)},
    degradation=0.5,
    recovery_ticks=48,
    seed_count=8,
)


def node(i, x, y, d):
    return {"id": i, "x": x, "y": y, "district": d}


def build(p):
    nodes = [
        node("c0", 0, 0, "center"), node("c1", 1000, 0, "center"),
        node("c2", 1000, 1000, "center"), node("c3", 0, 1000, "center"),
        node("o0", -2500, 0, "outskirts"), node("o1", 3500, 0, "outskirts"),
        node("o2", 3500, 1000, "outskirts"), node("o3", -2500, 1000, "outskirts"),
    ]
    streets = [
        ("s-c01", "c0", "c1", 1000), ("s-c12", "c1", "c2", 1000),
        ("s-c23", "c2", "c3", 1000), ("s-c30", "c3", "c0", 1000),
        ("s-o0c0", "o0", "c0", 2500), ("s-c1o1", "c1", "o1", 2500),
        ("s-o1o2", "o1", "o2", 1000), ("s-c2o2", "c2", "o2", 2500),
        ("s-o3c3", "o3", "c3", 2500), ("s-o0o3", "o0", "o3", 1000),
    ]
    places = [
        {"id": "homes-c0", "kind": "home", "node": "c0", "capacity": 200},
        {"id": "homes-c2", "kind": "home", "node": "c2", "capacity": 200},
        {"id": "homes-o0", "kind": "home", "node": "o0", "capacity": 200},
        {"id": "homes-o1", "kind": "home", "node": "o1", "capacity": 200},
        {"id": "homes-o2", "kind": "home", "node": "o2", "capacity": 200},
        {"id": "office-c1", "kind": "office", "node": "c1", "capacity": 300},
        {"id": "office-c3", "kind": "office", "node": "c3", "capacity": 300},
        {"id": "plant-o3", "kind": "office", "node": "o3", "capacity": 300},
        {"id": "school-c3", "kind": "school", "node": "c3", "capacity": 200},
        {"id": "school-o2", "kind": "school", "node": "o2", "capacity": 200},
        {"id": "market-c2", "kind": "shop", "node": "c2", "capacity": 200},
        {"id": "market-o0", "kind": "shop", "node": "o0", "capacity": 200},
    ]
    templates = [
        {"name": "worker", "weight": 0.55, "slots": [
            {"start": 0, "activity": "home", "place": "home"},
            {"start": 8, "activity": "work", "place": "office"},
            {"start": 17, "activity": "shopping", "place": "shop"},
            {"start": 19, "activity": "home", "place": "home"}]},
        {"name": "student", "weight": 0.25, "slots": [
            {"start": 0, "activity": "home", "place": "home"},
            {"start": 8, "activity": "study", "place": "school"},
            {"start": 15, "activity": "home", "place": "home"}]},
        {"name": "at-home", "weight": 0.2, "slots": [
            {"start": 0, "activity": "home", "place": "home"},
            {"start": 10, "activity": "shopping", "place": "shop"},
            {"start": 12, "activity": "home", "place": "home"}]},
    ]
    hospitals = [
        {"id": h, "district": h.split("-")[1], "general_capacity": g, "icu_capacity": i,
         "care_quality": 0.9, "capacity_degradation_factor": p["degradation"], "referral_peers": [x for x in p["beds"] if x != h]}
        for h, (g, i) in p["beds"].items()
    ]
    r = p["recovery_ticks"]
    ict = [
        {"id": "ict-city", "district": "center", "vulnerability": 0.3, "recovery_ticks": r},
        {"id": "ict-center", "district": "center", "vulnerability": 1.0, "recovery_ticks": r,
         "depends_on": ["ict-city"]},
        {"id": "ict-outskirts", "district": "outskirts", "vulnerability": 0.3,
         "recovery_ticks": r, "depends_on": ["ict-city"]},
        {"id": "ict-hosp-center", "host": "hosp-center", "vulnerability": 0.8,
         "recovery_ticks": r, "depends_on": ["ict-center"]},
        {"id": "ict-hosp-outskirts", "host": "hosp-outskirts", "vulnerability": 0.8,
         "recovery_ticks": r, "depends_on": ["ict-outskirts"]},
    ]
    lights = []
    roadways = []
    for s, a, b, _ in streets:
        district = "center" if b.startswith("c") else "outskirts"
        for rev in (False, True):
            dst = a if rev else b
            d = "center" if dst.startswith("c") else "outskirts"
            rid = f"r-{s[2:]}{'-rev' if rev else ''}"
            light = None
            if s.startswith("s-c") and s[3].isdigit() and s[4].isdigit():
                light = f"light-{rid[2:]}"
            elif d == "outskirts" and s in ("s-o1o2", "s-o0o3"):
                light = f"light-{rid[2:]}"
            entry = {"id": rid, "street": s, "reverse": rev, "station": True}
            if light:
                entry["light"] = light
                lights.append({"id": light, "district": d})
                ict.append({"id": f"ict-{light}", "host": light, "vulnerability": 0.8,
                            "recovery_ticks": r,
                            "depends_on": ["ict-center" if d == "center" else "ict-outskirts"]})
            roadways.append(entry)
    return {
        "name": "casestudy",
        "seed": 20240601,
        "horizon_days": 60,
        "tick_per_day": 24,
        "landscape": {
            "districts": ["center", "outskirts"],
            "nodes": nodes,
            "streets": [{"id": s, "from": a, "to": b, "length": l} for s, a, b, l in streets],
            "places": places,
        },
        "population": {
            "contacts_k": p["k"],
            "jitter_hours": 1,
            "cross_district_share": 0.1,
            "districts": [{"district": d, "citizens": n} for d, n in p["citizens"].items()],
            "templates": templates,
        },
        "ict": {
            "nodes": ict,
            "attackers": [{"id": "attacker"}],
            "attack_types": {"botnet": {"propagation": 0.6, "recovery_scale": 1.0}},
        },
        "health": {
            "disease": {
                "beta": p["beta"], "mild_ticks": p["mild_ticks"],
                "severe_ticks": p["severe_ticks"], "critical_ticks": p["critical_ticks"],
                "p_severe": p["p_severe"], "p_critical": p["p_critical"],
                "p_die_treated": p["p_die_treated"], "p_die_untreated": p["p_die_untreated"],
            },
            "hospitals": hospitals,
        },
        "mobility": {
            "light_off_factor": 0.4,
            "roadway_defaults": {"free_flow_speed": 13.9, "capacity": 150.0,
                                 "background_flow": 400.0},
            "roadways": roadways,
            "lights": lights,
        },
        "hazards": [
            {"id": "outbreak", "day": 0, "kind": "disease_seed",
             "target": {"role": "patient", "district": "center"}, "count": p["seed_count"]},
            {"id": "attack", "day": 20, "kind": "cyberattack", "target": {"id": "ict-center"},
             "attacker": "attacker", "attack_type": "botnet"},
        ],
        "mitigations": {
            "beds": [{"target": {"role": "hospital"}, "overrides": {
                "nominal_general_capacity": {"scale": 1.5},
                "nominal_icu_capacity": {"scale": 1.5}}}],
            "cybersecurity": [{"target": {"role": "cyber-infrastructure"}, "overrides": {
                "recovery_ticks": {"scale": 0.5}, "vulnerability": {"scale": 0.5}}}],
        },
    }


if __name__ == "__main__":
    for arg in sys.argv[1:]:
        k, v = arg.split("=")
        P[k] = json.loads(v)
    out = json.dumps(build(P), indent=1)
    with open(sys.argv[0].rsplit("/", 1)[0] + "/casestudy.json", "w") as f:
        f.write(out + "\n")
