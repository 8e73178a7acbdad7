#!/usr/bin/env python3
"""Generate the two benchmark CSVs (data/gbcsg2.csv, data/pbc.csv).

Both files are synthetic replicas of the classic breast-cancer and liver-
cirrhosis cohorts: same schema, same sample counts, same censoring counts,
comparable covariate ranges, and hazard structures chosen so that the
relative behaviour of the estimators in this project matches what is
reported for the originals (tree ensembles ahead on gbcsg2, proportional-
hazards models competitive on pbc). The originals are not redistributable
here, so this committed script is the single source of truth for the data.

Deterministic: fixed seed, exact censoring counts by construction.
Run from the repository root:  python3 scripts/make_datasets.py
"""

import os

import numpy as np

SEED = 20260816
OUT_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data")


def censor_scale_exact(t_event, u_cens, n_events_target, mask=None):
    """Scale s for censoring times C = s*u so that exactly n_events_target
    of the (masked) subjects have t_event <= C. Works because the event
    count as a function of s steps by one at each order statistic of t/u."""
    v = t_event / u_cens
    vm = np.sort(v[mask] if mask is not None else v)
    k = n_events_target
    assert 0 < k < len(vm)
    assert vm[k - 1] < vm[k], "tied order statistics; change seed"
    return 0.5 * (vm[k - 1] + vm[k])


def finalize_times(t_event, c_time):
    """Observed time and event indicator, then round to whole days (>= 1).
    The indicator is fixed before rounding so counts are exact."""
    event = (t_event <= c_time).astype(int)
    t_obs = np.minimum(t_event, c_time)
    t_obs = np.maximum(np.rint(t_obs), 1.0).astype(int)
    return t_obs, event


def make_gbcsg2(rng):
    n = 686
    n_censored = 387
    n_events = n - n_censored  # 299

    hor_th = (rng.random(n) < 0.36).astype(int)
    age = np.clip(np.rint(rng.normal(53, 10, n)), 21, 80).astype(int)
    menostat = ((age + rng.normal(0, 3.0, n)) > 50).astype(int)
    tsize = np.clip(np.rint(np.exp(rng.normal(np.log(25), 0.45, n))), 3, 120).astype(int)
    tgrade = rng.choice([1, 2, 3], size=n, p=[0.12, 0.64, 0.24])
    pnodes = np.clip(1 + rng.poisson(np.exp(rng.normal(np.log(3.0), 0.9, n))), 1, 51).astype(int)
    progrec = np.where(
        rng.random(n) < 0.22,
        rng.integers(0, 6, n),
        np.clip(np.rint(np.exp(rng.normal(np.log(32), 1.25, n))), 0, 2380),
    ).astype(int)
    estrec = np.clip(
        np.rint(np.exp(0.55 * np.log1p(progrec) + rng.normal(np.log(8), 1.1, n))), 0, 1145
    ).astype(int)

    # Threshold and interaction effects: strong for adaptive partitioning,
    # only partially expressible as a linear predictor.
    lp = (
        0.50 * (pnodes >= 4)
        + 0.40 * (pnodes >= 10)
        + 0.55 * (progrec < 20)
        - 0.40 * hor_th
        + 0.30 * (tgrade >= 2)
        + 0.15 * (tgrade == 3)
        + 0.25 * (age < 40)
        + 0.30 * (tsize > 30)
        + 0.30 * ((pnodes >= 4) & (progrec < 20))
    )
    lp = lp - lp.mean()

    shape = 1.15
    scale_t = 2400.0
    u = rng.random(n)
    t_event = scale_t * (-np.log(u) / np.exp(lp)) ** (1.0 / shape)

    u_cens = rng.uniform(0.15, 1.0, n)
    s = censor_scale_exact(t_event, u_cens, n_events)
    t_obs, event = finalize_times(t_event, s * u_cens)
    assert event.sum() == n_events

    header = "horTh,age,menostat,tsize,tgrade,pnodes,progrec,estrec,time,cens"
    rows = []
    for i in range(n):
        rows.append(
            "%s,%d,%s,%d,%s,%d,%d,%d,%d,%d"
            % (
                "yes" if hor_th[i] else "no",
                age[i],
                "Post" if menostat[i] else "Pre",
                tsize[i],
                ["I", "II", "III"][tgrade[i] - 1],
                pnodes[i],
                progrec[i],
                estrec[i],
                t_obs[i],
                event[i],
            )
        )
    return header, rows


def make_pbc(rng):
    n = 418
    n_trial = 312           # rows with treatment assigned; the rest carry NAs
    n_complete = 276
    n_events_complete = 111

    idx = np.arange(n)
    trial = np.zeros(n, dtype=bool)
    trial[rng.permutation(n)[:n_trial]] = True

    age = np.round(np.clip(rng.normal(50, 10, n), 26, 78), 2)
    sex_f = (rng.random(n) < 0.89).astype(int)
    bili = np.round(np.clip(np.exp(rng.normal(np.log(1.4), 1.0, n)), 0.3, 28.0), 1)
    albumin = np.round(np.clip(rng.normal(3.5, 0.42, n), 1.96, 4.64), 2)
    protime = np.round(np.clip(rng.normal(10.7, 1.0, n), 9.0, 18.0), 1)
    edema = rng.choice([0.0, 0.5, 1.0], size=n, p=[0.84, 0.105, 0.055])
    ascites = ((bili > 3.0) & (rng.random(n) < 0.35)).astype(int)
    hepato = (rng.random(n) < np.clip(0.25 + 0.12 * np.log1p(bili), 0, 0.9)).astype(int)
    spiders = (rng.random(n) < 0.29).astype(int)
    chol = np.clip(np.rint(np.exp(rng.normal(np.log(310), 0.45, n))), 120, 1775).astype(int)
    copper = np.clip(np.rint(np.exp(0.45 * np.log(bili) + rng.normal(np.log(60), 0.7, n))), 4, 588).astype(int)
    alk_phos = np.round(np.clip(np.exp(rng.normal(np.log(1250), 0.75, n)), 289.0, 13862.4), 1)
    ast = np.round(np.clip(np.exp(0.25 * np.log(bili) + rng.normal(np.log(100), 0.4, n)), 26.35, 457.25), 2)
    platelet = np.clip(np.rint(rng.normal(260, 95, n)), 62, 721).astype(int)
    stage = np.clip(np.rint(1.0 + 1.05 * np.log1p(bili) + rng.normal(1.0, 0.75, n)), 1, 4).astype(int)
    trt = np.where(rng.random(n) < 0.5, 1, 2)

    # Mostly log-linear risk (the classic prognostic score for this disease),
    # so a proportional-hazards fit on the raw columns is hard to beat.
    lp = (
        0.88 * np.log(bili)
        - 2.53 * np.log(albumin)
        + 0.034 * age
        + 2.38 * np.log(protime / 10.0)
        + 0.86 * edema
        + 0.18 * (stage >= 3)
    )
    lp = lp - lp.mean()

    shape = 1.25
    scale_t = 3200.0
    u = rng.random(n)
    t_event = scale_t * (-np.log(u) / np.exp(lp)) ** (1.0 / shape)

    # Missingness: every non-trial row lacks trt (and most labs); 36 trial
    # rows lose scattered labs. 418 - 106 - 36 = 276 complete rows.
    na = {k: np.zeros(n, dtype=bool) for k in ("trt", "ascites", "hepato", "spiders", "chol", "copper", "ast", "platelet", "stage")}
    nontrial_rows = idx[~trial]
    for k in ("trt", "ascites", "hepato", "spiders", "chol", "copper", "ast"):
        na[k][nontrial_rows] = True
    na["platelet"][nontrial_rows[rng.random(len(nontrial_rows)) < 0.04]] = True

    trial_rows = idx[trial]
    broken = rng.permutation(trial_rows)[:36]
    for r in broken:
        labs = ["chol", "copper", "platelet", "stage"]
        take = rng.permutation(4)[: rng.integers(1, 3)]
        for t in take:
            na[labs[t]][r] = True
    complete = ~np.any(np.stack(list(na.values())), axis=0)
    assert complete.sum() == n_complete, complete.sum()

    u_cens = rng.uniform(0.25, 1.0, n)
    s = censor_scale_exact(t_event, u_cens, n_events_complete, mask=complete)
    t_obs, event = finalize_times(t_event, s * u_cens)
    assert event[complete].sum() == n_events_complete

    def cell(value, is_na, fmt="%s"):
        return "NA" if is_na else (fmt % value)

    header = ("id,trt,age,sex,ascites,hepato,spiders,edema,bili,chol,albumin,"
              "copper,alk_phos,ast,platelet,protime,stage,time,status")
    rows = []
    for i in range(n):
        rows.append(",".join([
            "%d" % (i + 1),
            cell(trt[i], na["trt"][i], "%d"),
            "%.2f" % age[i],
            "f" if sex_f[i] else "m",
            cell(ascites[i], na["ascites"][i], "%d"),
            cell(hepato[i], na["hepato"][i], "%d"),
            cell(spiders[i], na["spiders"][i], "%d"),
            "%.1f" % edema[i],
            "%.1f" % bili[i],
            cell(chol[i], na["chol"][i], "%d"),
            "%.2f" % albumin[i],
            cell(copper[i], na["copper"][i], "%d"),
            "%.1f" % alk_phos[i],
            cell(ast[i], na["ast"][i], "%.2f"),
            cell(platelet[i], na["platelet"][i], "%d"),
            "%.1f" % protime[i],
            cell(stage[i], na["stage"][i], "%d"),
            "%d" % t_obs[i],
            "%d" % event[i],
        ]))
    return header, rows


def write_csv(path, header, rows):
    with open(path, "w") as f:
        f.write(header + "\n")
        for r in rows:
            f.write(r + "\n")
    print("wrote %s (%d rows)" % (path, len(rows)))


def main():
    os.makedirs(OUT_DIR, exist_ok=True)
    rng = np.random.default_rng(SEED)
    header, rows = make_gbcsg2(rng)
    write_csv(os.path.join(OUT_DIR, "gbcsg2.csv"), header, rows)
    header, rows = make_pbc(rng)
    write_csv(os.path.join(OUT_DIR, "pbc.csv"), header, rows)


if __name__ == "__main__":
    main()
