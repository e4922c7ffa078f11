"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import itertools
import math
import time
from collections import defaultdict
from statistics import median

import numpy as np

from test_bayesnet import brute_posterior, cv_truth, enumerate_joint, random_network, skeleton

from aifedge.agent import AgentHyperparams, Provenance, ScoreEntry, interpolate_scores, select_action, tied_best
from aifedge.bayesnet import (
    Dag,
    VariableKind,
    batch_surprise,
    bic_score,
    fit_parameters,
    infer,
    learn_structure,
    log_probs,
    row_surprise,
    sample_model,
)
from aifedge.domain import (
    Constant,
    MetricBatch,
    MetricSample,
    ParameterSpace,
    ParameterSpec,
    ScaledReciprocal,
    SloSpec,
    enumerate_configs,
    neighbor_distance,
)
from aifedge.harness import ExperimentConfig, default_suite, run_experiment, run_suite
from aifedge.sim import DEVICES, SERVICES, load_scenario, true_fulfillment
from aifedge.slo import batch_fulfillment

SCENARIOS = [(s, d) for s in SERVICES for d in DEVICES]

# published preferred configuration and its fulfillment, per scenario
PUBLISHED = {
    ("CV", "AGX+"): ({"pixel": 1080, "fps": 5}, 0.94),
    ("CV", "AGX-"): ({"pixel": 720, "fps": 15}, 0.62),
    ("CV", "NX+"): ({"pixel": 720, "fps": 10}, 0.83),
    ("CV", "NX-"): ({"pixel": 480, "fps": 5}, 0.73),
    ("QR", "AGX+"): ({"pixel": 720, "fps": 15}, 1.0),
    ("QR", "AGX-"): ({"pixel": 720, "fps": 5}, 1.0),
    ("QR", "NX+"): ({"pixel": 720, "fps": 5}, 1.0),
    ("QR", "NX-"): ({"pixel": 480, "fps": 10}, 1.0),
    ("LI", "AGX+"): ({"mode": "single", "fps": 5}, 0.98),
    ("LI", "AGX-"): ({"mode": "single", "fps": 5}, 0.93),
    ("LI", "NX+"): ({"mode": "single", "fps": 5}, 0.92),
    ("LI", "NX-"): ({"mode": "single", "fps": 5}, 0.90),
}


def announce(capsys, number, title, ok, detail):
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {title}: {detail}")


def test_criterion_01_convergence_speed(capsys):
    counts, slowest, lines = {}, 0.0, []
    for service, device in SCENARIOS:
        start = time.perf_counter()
        counts[service, device] = sum(
            run_experiment(ExperimentConfig(service, device, seed=seed, cycles=40)).converged for seed in range(10)
        )
        slowest = max(slowest, time.perf_counter() - start)
        lines.append(f"{service}/{device} {counts[service, device]}/10")
    short = [k for k, v in counts.items() if v < 8]
    ok = not short and slowest < 60
    announce(capsys, 1, "convergence within 40 cycles in >= 8/10 seeds",
             ok, f"{', '.join(lines)}; slowest scenario {slowest:.1f}s")
    assert slowest < 60
    assert not short, f"scenarios below 8/10: {short}"


def test_criterion_02_optimality_rate(capsys):
    start = time.perf_counter()
    rows = run_suite(default_suite(seeds=range(5), cycles=40), parallelism=4)
    elapsed = time.perf_counter() - start
    assert not any(r.error for r in rows)
    flags = defaultdict(list)
    for r in rows:
        flags[r.service, r.device].append(int(r.optimal_match))
    matched = {k: median(v) >= 1 for k, v in flags.items()}
    n = sum(matched.values())
    missed = [f"{s}/{d}" for (s, d), m in matched.items() if not m]
    ok = n >= 10 and elapsed < 300
    announce(capsys, 2, "optimal configuration (median of 5 seeds) in >= 10/12 scenarios",
             ok, f"{n}/12 matched, missed {missed or 'none'}; suite {elapsed:.1f}s")
    assert elapsed < 300
    assert n >= 10


def test_criterion_03_published_calibration(capsys):
    errors = {}
    for (service, device), (assign, target) in PUBLISHED.items():
        scenario = load_scenario(service, device)
        value = true_fulfillment(scenario, scenario.space.config(assign), n=10_000)
        errors[service, device] = abs(value - target)
    worst = max(errors, key=errors.get)
    ok = all(e <= 0.05 for e in errors.values())
    announce(capsys, 3, "published fulfillment cells within 0.05",
             ok, f"worst {worst[0]}/{worst[1]} off by {errors[worst]:.3f}")
    assert ok


def test_criterion_04_inference_oracle(capsys):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        model = random_network(rng, max_nodes=5, max_states=4)
        names = list(model.names)
        rng.shuffle(names)
        n_query = int(rng.integers(1, len(names) + 1))
        query = names[:n_query]
        evidence = {}
        for name in names[n_query:]:
            if rng.random() < 0.6:
                v = model.variable(name)
                evidence[name] = v.states[int(rng.integers(v.card))]
        got = infer(model, query, evidence).values
        worst = max(worst, float(np.abs(got - brute_posterior(model, query, evidence)).max()))
    ok = worst <= 1e-9
    announce(capsys, 4, "variable elimination equals full enumeration", ok, f"max error {worst:.2e} on 100 networks")
    assert ok


def test_criterion_05_surprise_properties(capsys):
    rng = np.random.default_rng(99)
    min_surprise, additivity, hand = math.inf, 0.0, 0.0
    for seed in range(50):
        truth = random_network(rng)
        data = sample_model(truth, int(rng.integers(2, 300)), seed)
        model = fit_parameters(learn_structure(data), data)
        min_surprise = min(min_surprise, float((-log_probs(model, data)).min()))
        for _ in range(5):
            cut = int(rng.integers(1, len(data)))
            idx = rng.permutation(len(data))
            left, right = data.take(np.sort(idx[:cut])), data.take(np.sort(idx[cut:]))
            whole = batch_surprise(model, data)
            additivity = max(additivity, abs(whole - batch_surprise(model, left) - batch_surprise(model, right)))
        # fixture nets: -ln of the product of CPT entries by direct enumeration
        joint = enumerate_joint(truth)
        for row in sample_model(truth, 10, seed).rows():
            key = tuple(truth.variable(n).code(row[n]) for n in truth.names)
            hand = max(hand, abs(row_surprise(truth, row) - (-math.log(joint[key]))))
    ok = min_surprise >= 0 and additivity <= 1e-9 and hand <= 1e-12
    announce(capsys, 5, "surprise non-negative, additive and equal to -ln of factor products", ok,
             f"min {min_surprise:.3f}, additivity error {additivity:.1e}, hand error {hand:.1e}")
    assert ok


def test_criterion_06_slo_oracle(capsys):
    rng = np.random.default_rng(6)
    space = ParameterSpace((
        ParameterSpec.numeric_states("pixel", (480, 720, 1080)),
        ParameterSpec.numeric_states("fps", (5, 10, 15, 20, 25)),
    ))
    slos = (
        SloSpec("time", "time", upper=ScaledReciprocal(1000.0, "fps")),
        SloSpec("energy", "energy", upper=Constant(15.0)),
        SloSpec("rate", "rate", lower=Constant(3.0)),
        SloSpec("band", "energy", lower=Constant(5.0), upper=Constant(12.0)),
    )
    configs = enumerate_configs(space)
    worst = 0.0
    for _ in range(1000):
        config = configs[int(rng.integers(len(configs)))]
        budget = 1000.0 / float(config["fps"])
        n = int(rng.integers(1, 40))
        # a third of the values land exactly on a threshold
        time_ = np.where(rng.random(n) < 0.3, budget, rng.uniform(0, 2 * budget, n))
        energy = rng.choice([5.0, 12.0, 15.0, *rng.uniform(0, 25, 3)], n)
        rate = np.where(rng.random(n) < 0.3, 3.0, rng.uniform(0, 6, n))
        samples = tuple(
            MetricSample(i, {"time": float(t), "energy": float(e), "rate": float(r)}, config)
            for i, (t, e, r) in enumerate(zip(time_, energy, rate))
        )
        report = batch_fulfillment(MetricBatch(samples), slos, space)
        direct = {
            "time": sum(t <= budget for t in time_) / n,
            "energy": sum(e <= 15.0 for e in energy) / n,
            "rate": sum(r >= 3.0 for r in rate) / n,
            "band": sum(5.0 <= e <= 12.0 for e in energy) / n,
        }
        for name, value in direct.items():
            worst = max(worst, abs(report.per_slo[name] - value))
        worst = max(worst, abs(report.overall - sum(direct.values()) / len(direct)))
    config = configs[0]
    edge = MetricSample(0, {"time": 200.0, "energy": 15.0, "rate": 3.0}, config)
    inclusive = batch_fulfillment(MetricBatch((edge,)), slos[:3], space).overall == 1.0
    ok = worst <= 1e-12 and inclusive
    announce(capsys, 6, "batch fulfillment equals direct recomputation", ok,
             f"max error {worst:.1e} on 1000 batches, thresholds inclusive: {inclusive}")
    assert ok


def test_criterion_07_structure_learning(capsys):
    truth = cv_truth()
    empty = Dag(truth.variables)
    want = {frozenset(e) for e in [("pixel", "time"), ("fps", "time"), ("fps", "energy")]}
    recovered, bic_ok, roots_ok = 0, True, True
    for seed in range(20):
        data = sample_model(truth, 10_000, seed)
        dag = learn_structure(data)
        recovered += want <= skeleton(dag)
        bic_ok &= bic_score(dag, data) >= bic_score(empty, data)
        roots_ok &= all(dag.variable(b).kind is not VariableKind.PARAMETER for _, b in dag.edges)
    ok = recovered >= 16 and bic_ok and roots_ok
    announce(capsys, 7, "structure learning recovers the generating skeleton", ok,
             f"skeleton in {recovered}/20 seeds, BIC >= empty: {bic_ok}, parameters stay roots: {roots_ok}")
    assert ok


def test_criterion_08_scoring_invariants(capsys):
    space = ParameterSpace((
        ParameterSpec.numeric_states("pixel", (480, 720, 1080)),
        ParameterSpec.numeric_states("fps", (5, 10, 15, 20, 25)),
    ))
    configs = enumerate_configs(space)
    rng = np.random.default_rng(8)
    flips = 0
    for trial in range(1000):
        if trial % 2:
            pv, ig = rng.uniform(0, 100, len(configs)), rng.uniform(0, 300, len(configs))
        else:
            pv, ig = rng.integers(0, 5, len(configs)) * 25.0, rng.integers(0, 4, len(configs)) * 50.0
        matrix = {c: ScoreEntry(float(p), float(g), Provenance.OBSERVED) for c, p, g in zip(configs, pv, ig)}
        w_pv, w_ig = rng.uniform(0.1, 5, 2)
        scale = float(rng.uniform(0.01, 100))
        base = AgentHyperparams(w_pv=float(w_pv), w_ig=float(w_ig))
        scaled = AgentHyperparams(w_pv=float(w_pv) * scale, w_ig=float(w_ig) * scale)
        same = tied_best(matrix, base) == tied_best(matrix, scaled)
        same &= select_action(matrix, base, np.random.default_rng(trial)) == select_action(
            matrix, scaled, np.random.default_rng(trial))
        flips += not same

    outside = []
    draw = np.random.default_rng(80)
    for k in (2, 3, 5):
        tied = configs[:k]
        matrix = {c: ScoreEntry(50.0, 100.0, Provenance.OBSERVED) for c in tied}
        matrix.update({c: ScoreEntry(10.0, 10.0, Provenance.OBSERVED) for c in configs[k:]})
        n = 3000
        counts = {c: 0 for c in tied}
        for _ in range(n):
            counts[select_action(matrix, AgentHyperparams(), draw)] += 1
        p = 1 / k
        bound = 3 * math.sqrt(n * p * (1 - p))
        outside += [(k, c) for c, v in counts.items() if abs(v - n * p) > bound]
    ok = flips == 0 and not outside
    announce(capsys, 8, "argmax invariant under weight rescaling and uniform ties", ok,
             f"{flips} changed argmax in 1000 matrices, {len(outside)} tie counts outside 3 sigma")
    assert ok


def test_criterion_09_interpolation_contract(capsys):
    space = ParameterSpace((
        ParameterSpec.numeric_states("pixel", (480, 720, 1080)),
        ParameterSpec.numeric_states("fps", (5, 10, 15, 20, 25)),
    ))
    configs = enumerate_configs(space)
    rng = np.random.default_rng(9)
    subsets = [s for k in (1, 2, 3) for s in itertools.combinations(configs, k)]
    subsets += [tuple(rng.choice(configs, size=int(rng.integers(4, 15)), replace=False)) for _ in range(500)]
    violations = 0
    for subset in subsets:
        observed = {
            c: ScoreEntry(float(rng.uniform(0, 100)), float(rng.uniform(0, 300)), Provenance.OBSERVED) for c in subset
        }
        out = interpolate_scores(observed, space)
        for config in configs:
            if config in observed:
                violations += out[config] is not observed[config]
                continue
            dist = {c: neighbor_distance(c, config, space) for c in observed}
            near = [c for c, d in dist.items() if d == min(dist.values())]
            entry = out[config]
            violations += entry.provenance is not Provenance.INTERPOLATED
            for attr in ("pv", "ig"):
                values = [getattr(observed[c], attr) for c in near]
                got = getattr(entry, attr)
                if len(near) == 1:
                    violations += got != values[0]
                else:
                    violations += not (min(values) - 1e-12 <= got <= max(values) + 1e-12)
    ok = violations == 0
    announce(capsys, 9, "interpolation stays within nearest observed values", ok,
             f"{violations} violations over {len(subsets)} observation patterns")
    assert ok


def test_criterion_10_determinism(tmp_path, capsys):
    def suite(parallelism, name):
        out = tmp_path / name
        configs = default_suite(seeds=(0,), cycles=40, out_dir=out)
        run_suite(configs, parallelism, out)
        return {p.relative_to(out): p.read_bytes() for p in sorted(out.rglob("*.csv"))}

    serial = suite(1, "serial")
    parallel = suite(4, "parallel")
    again = suite(1, "again")
    trajectories = sum(p.name == "trajectory.csv" for p in serial)
    ok = serial == parallel == again and trajectories == 12
    announce(capsys, 10, "suite outputs byte-identical across reruns and parallelism", ok,
             f"{len(serial)} CSV files compared, {trajectories} trajectories")
    assert ok
