#!/usr/bin/env python3
"""Generate the synthetic default parameter set in params/default.

The values are shaped like the published tables (monotone hazards,
carrier penetrance far above non-carrier) but are NOT clinical estimates.
Covariate distributions are calibrated so that E[r(t, X)] * (1 - AR) = 1
for every race and age band of attributable_risk.csv.
"""

import argparse
import hashlib
import itertools
import json
import math
from pathlib import Path

MAX_AGE = 94
RACES = ["white", "black", "hispanic", "asian", "native_american"]

# (1 - AR) per race for bands <50 and >=50.
ONE_MINUS_AR = {
    "white": (1.81, 1.96),
    "black": (1.41, 1.44),
    "hispanic": (1.37, 1.41),
    "asian": (2.10, 2.43),
    "native_american": (1.55, 1.94),
}

# Non-carrier breast hazard scale per race, applied to the white curve.
RACE_BREAST_SCALE = {"white": 1.0, "black": 0.92, "hispanic": 0.72, "asian": 0.66, "native_american": 0.6}
RACE_MORTALITY_SCALE = {"white": 1.0, "black": 1.3, "hispanic": 0.9, "asian": 0.75, "native_american": 1.25}

# log relative hazards beta_1..beta_19
BETA = [
    0.10, 0.20,          # menarche 12-13, <12
    0.35, 0.65,          # one biopsy, two or more
    -0.10, -0.25,        # age >= 50 x biopsy terms
    -0.70, -1.00, -1.40,  # first live birth 20-24, 25-29, >29
    0.90, 1.50,          # one / two or more affected first-degree relatives
    -0.10, -0.20, -0.30,  # one relative x first birth
    -0.30, -0.40, -0.50,  # two relatives x first birth
    -0.30, 0.60,         # biopsy with hyperplasia no / yes
]

BCRAT_BASELINE_SCALE = 0.9
BCRAT_CUTS = [20, 25, 30, 35, 40, 45, 50, 55, 60, 65, 70, 75, 80, 90]


def logistic(t, height, mid, width):
    return height / (1.0 + math.exp(-(t - mid) / width))


def female_mortality(t, race):
    return min(0.4, RACE_MORTALITY_SCALE[race] * math.exp(-10.2 + 0.088 * t))


def male_mortality(t):
    return min(0.4, 1.4 * math.exp(-10.2 + 0.088 * t))


def breast_hazards(race):
    scale = RACE_BREAST_SCALE[race]
    h0 = [scale * logistic(t, 0.0042, 52.0, 7.0) for t in range(1, MAX_AGE + 1)]
    h1 = [logistic(t, 0.045, 40.0, 5.0) for t in range(1, MAX_AGE + 1)]
    h2 = [logistic(t, 0.032, 46.0, 6.0) for t in range(1, MAX_AGE + 1)]
    h3 = [1 - (1 - a) * (1 - b) for a, b in zip(h1, h2)]
    return [h0, h1, h2, h3]


def ovarian_hazards():
    h0 = [logistic(t, 0.0004, 60.0, 6.0) for t in range(1, MAX_AGE + 1)]
    h1 = [logistic(t, 0.014, 50.0, 5.0) for t in range(1, MAX_AGE + 1)]
    h2 = [logistic(t, 0.006, 58.0, 5.0) for t in range(1, MAX_AGE + 1)]
    h3 = [1 - (1 - a) * (1 - b) for a, b in zip(h1, h2)]
    return [h0, h1, h2, h3]


def male_breast_hazards():
    h0 = [logistic(t, 0.00002, 65.0, 7.0) for t in range(1, MAX_AGE + 1)]
    h1 = [logistic(t, 0.0002, 60.0, 7.0) for t in range(1, MAX_AGE + 1)]
    h2 = [logistic(t, 0.0012, 60.0, 7.0) for t in range(1, MAX_AGE + 1)]
    h3 = [1 - (1 - a) * (1 - b) for a, b in zip(h1, h2)]
    return [h0, h1, h2, h3]


def penetrance_from_hazard(hazard, mortality):
    pen, survival = [], 1.0
    for h, d in zip(hazard, mortality):
        pen.append(h * survival)
        survival *= 1.0 - h - d
    return pen


def hazard_from_penetrance(pen, mortality):
    hazard, survival = [], 1.0
    for p, d in zip(pen, mortality):
        h = p / survival
        hazard.append(h)
        survival *= 1.0 - h - d
    return hazard


# ---------------------------------------------------------------------------
# relative hazard and covariate calibration


def rel_hazard(band, x1, x2, x3, x4, x5):
    b = lambda k: BETA[k - 1]
    old = band == 1
    lp = 0.0
    lp += {0: 0.0, 1: b(1), 2: b(2)}[x1]
    lp += {0: 0.0, 1: b(3), 2: b(4)}[x2]
    if old and x2 == 1:
        lp += b(5)
    if old and x2 > 0:
        lp += b(6)
    if x3 > 0:
        lp += b([0, 7, 8, 9][x3])
    if x4 == 1:
        lp += b(10) + (b([0, 12, 13, 14][x3]) if x3 > 0 else 0.0)
    if x4 == 2:
        lp += b(11) + (b([0, 15, 16, 17][x3]) if x3 > 0 else 0.0)
    if x2 > 0 and x5 == 0:
        lp += b(18)
    if x2 > 0 and x5 == 1:
        lp += b(19)
    return math.exp(lp)


def expected_r(dist, band):
    total = 0.0
    for x1, x2, x5, x3, x4 in itertools.product(range(3), range(3), range(3), range(4), range(3)):
        p = dist["menarche"][x1] * dist["biopsies"][x2] * dist["hyperplasia"][x5] * dist["joint"][x3][x4]
        total += p * rel_hazard(band, x1, x2, x3, x4, x5)
    return total


def base_distribution(race, band):
    shift = RACES.index(race) * 0.02
    menarche = [0.30 + shift, 0.50, 0.20 - shift]
    biopsies = [0.85, 0.10, 0.05] if band == 0 else [0.75, 0.15, 0.10]
    hyperplasia = [0.55, 0.05, 0.40]
    x3 = [0.10, 0.25, 0.35, 0.30]
    x4 = [0.88, 0.10, 0.02]
    joint = [[a * b for b in x4] for a in x3]
    return {"menarche": menarche, "biopsies": biopsies, "hyperplasia": hyperplasia, "joint": joint}


def calibrate(race, band, target_er):
    """Mix the joint (X3, X4) block with a point mass so that E[r] hits the target."""
    dist = base_distribution(race, band)
    current = expected_r(dist, band)
    cells = [(i, j) for i in range(4) for j in range(3)]

    def with_point(i, j):
        d = json.loads(json.dumps(dist))
        d["joint"] = [[1.0 if (a, b) == (i, j) else 0.0 for b in range(3)] for a in range(4)]
        return expected_r(d, band)

    values = {c: with_point(*c) for c in cells}
    anchor = min(cells, key=values.get) if target_er < current else max(cells, key=values.get)
    # E[r] is linear in the mixing weight
    w = (target_er - current) / (values[anchor] - current)
    if not 0.0 <= w <= 1.0:
        raise SystemExit(f"cannot calibrate {race} band {band}: weight {w}")
    dist["joint"] = [[(1 - w) * dist["joint"][a][b] + (w if (a, b) == anchor else 0.0) for b in range(3)]
                     for a in range(4)]
    achieved = expected_r(dist, band)
    assert abs(achieved * (1.0 / target_er) - 1.0) < 1e-12, (race, band, achieved)
    return dist


# ---------------------------------------------------------------------------


def fmt(v):
    return repr(float(v))


def write(path, text, files):
    path.write_text(text)
    files[path.name] = hashlib.sha256(text.encode()).hexdigest()


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "params" / "default"))
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    files = {}

    ages = range(1, MAX_AGE + 1)
    mort_f = {r: [female_mortality(t, r) for t in ages] for r in RACES}
    mort_m = [male_mortality(t) for t in ages]

    # penetrance.csv: "all" columns are the white curves; other races get their own
    # female columns, since crude penetrance depends on the competing mortality.
    columns = {}
    white_breast = breast_hazards("white")
    for g in range(4):
        columns[f"breast:female:{g}:all"] = penetrance_from_hazard(white_breast[g], mort_f["white"])
    for race in RACES[1:]:
        for g, h in enumerate(breast_hazards(race)):
            columns[f"breast:female:{g}:{race}"] = penetrance_from_hazard(h, mort_f[race])
    for g, h in enumerate(ovarian_hazards()):
        columns[f"ovarian:female:{g}:all"] = penetrance_from_hazard(h, mort_f["white"])
    for race in RACES[1:]:
        for g, h in enumerate(ovarian_hazards()):
            columns[f"ovarian:female:{g}:{race}"] = penetrance_from_hazard(h, mort_f[race])
    for g, h in enumerate(male_breast_hazards()):
        columns[f"breast:male:{g}:all"] = penetrance_from_hazard(h, mort_m)
    lines = ["age," + ",".join(columns)]
    for i, t in enumerate(ages):
        lines.append(",".join([str(t)] + [fmt(c[i]) for c in columns.values()]))
    write(out / "penetrance.csv", "\n".join(lines) + "\n", files)

    mcols = {f"female:{r}": mort_f[r] for r in RACES}
    mcols["male:all"] = mort_m
    lines = ["age," + ",".join(mcols)]
    for i, t in enumerate(ages):
        lines.append(",".join([str(t)] + [fmt(c[i]) for c in mcols.values()]))
    write(out / "mortality.csv", "\n".join(lines) + "\n", files)

    write(out / "allele_freq.csv",
          "locus,ethnicity,frequency\n"
          "BRCA1,ashkenazi,0.0069\nBRCA2,ashkenazi,0.0064\n"
          "BRCA1,general,0.0006\nBRCA2,general,0.0007\n", files)

    lines = ["race,index,beta"]
    for race in RACES:
        for k, b in enumerate(BETA, start=1):
            lines.append(f"{race},{k},{fmt(b)}")
    write(out / "relhaz_coefficients.csv", "\n".join(lines) + "\n", files)

    # BCRAT population hazard: interval means of the non-carrier hazard as the
    # Mendelian tables imply it, scaled down; competing mortality on the same grid.
    lines = ["race,interval_start,interval_end,breast_hazard,competing_hazard"]
    for race in RACES:
        pen0 = columns.get(f"breast:female:0:{race}", columns["breast:female:0:all"])
        h0 = hazard_from_penetrance(pen0, mort_f[race])
        for start, end in zip(BCRAT_CUTS[:-1], BCRAT_CUTS[1:]):
            idx = range(start, end)  # ages start+1 .. end
            hb = BCRAT_BASELINE_SCALE * sum(h0[i] for i in idx) / (end - start)
            hd = sum(mort_f[race][i] for i in idx) / (end - start)
            lines.append(f"{race},{start},{end},{fmt(hb)},{fmt(hd)}")
    write(out / "bcrat_baseline.csv", "\n".join(lines) + "\n", files)

    lines = ["race,band,one_minus_ar"]
    for race in RACES:
        lines.append(f"{race},lt50,{ONE_MINUS_AR[race][0]}")
        lines.append(f"{race},ge50,{ONE_MINUS_AR[race][1]}")
    write(out / "attributable_risk.csv", "\n".join(lines) + "\n", files)

    names = {"menarche": ["ge14", "12_13", "lt12"], "biopsies": ["0", "1", "ge2"],
             "hyperplasia": ["0", "1", "unknown"]}
    x3_names, x4_names = ["lt20", "20_24", "25_29", "gt29"], ["0", "1", "ge2"]
    lines = ["race,band,factor,category,probability"]
    for race in RACES:
        for band, band_name in enumerate(["lt50", "ge50"]):
            dist = calibrate(race, band, 1.0 / ONE_MINUS_AR[race][band])
            for factor, cats in names.items():
                for c, p in zip(cats, dist[factor]):
                    lines.append(f"{race},{band_name},{factor},{c},{fmt(p)}")
            for i, a in enumerate(x3_names):
                for j, b in enumerate(x4_names):
                    lines.append(f"{race},{band_name},first_birth_relatives,{a}:{b},{fmt(dist['joint'][i][j])}")
    write(out / "covariate_distribution.csv", "\n".join(lines) + "\n", files)

    rules = {
        "version": 1,
        "rules": [
            {"kind": "any_cancer", "cancer": "ovarian", "max_degree": 2},
            {"kind": "onset_at_most", "cancer": "breast", "age": 50, "max_degree": 2},
            {"kind": "count_at_least", "cancer": "breast", "count": 2, "max_degree": 2},
        ],
    }
    write(out / "stratum_rules.json", json.dumps(rules, indent=2) + "\n", files)

    manifest = {
        "name": "default",
        "version": "1.0.0",
        "description": "Synthetic, non-clinical parameter set generated by tools/gen_default_params.py",
        "files": dict(sorted(files.items())),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


if __name__ == "__main__":
    main()
