"""End-to-end accuracy gates for the whole toolkit.

Each test checks one headline guarantee at its stated tolerance and prints
a single PASS/FAIL line so the gate can be read off the test log.
"""

import sys
import time

import numpy as np
import pytest

from omniinput import (AnnotationStore, BinGrid, BinReservoir, Direction,
                       EnergyModel, InputSpace, KernelKind, ModelOverlap,
                       ModuloAnnotator, NGramModel, OutputDistribution,
                       OverlapReport, PrecisionPerBin, ProposalKernel,
                       PTConfig, SumEnergy, WLConfig, Window, aupr,
                       build_overlap_report, entropy_divergence,
                       exact_output_distribution, exact_precision_per_bin,
                       included_bins, normalized_scales, pr_curve,
                       precision_at, pt_run, recall_at, reweight,
                       roc_unnormalized, stationarity_test, wang_landau_run)
from omniinput.external import ExternalModel
from omniinput.histogram import NormalizationState

LOWER = Direction.LOWER_IS_CONFIDENT


def gate(number: int, label: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[acceptance {number}] {label}: {status}{suffix}")
    assert ok, f"criterion {number} failed: {label}{suffix}"


def toy_space(length=8):
    return InputSpace(vocab_size=10, length=length)


def toy_grid(length=8):
    return BinGrid(0.0, 9.0 * length + 1.0, 1.0)


def test_1_sampler_entropy_accuracy():
    space, grid = toy_space(), toy_grid()
    model = SumEnergy(space)
    exact = exact_output_distribution(space, model, grid, method="dp")
    kernel = ProposalKernel(KernelKind.SINGLE_SITE_UNIFORM)

    t0 = time.monotonic()
    wl_hist, _, diag = wang_landau_run(space, model, grid, kernel,
                                       WLConfig(), rng_seed=1)
    wl_time = time.monotonic() - t0
    wl_dev, _ = entropy_divergence(wl_hist, exact, mass_coverage=0.99)

    t0 = time.monotonic()
    config = PTConfig(tuple(np.geomspace(16.0, 1.0, 6)),
                      steps_per_replica=60_000, burn_in=2_000)
    pth, _, _ = pt_run(space, model, grid, kernel, config, rng_seed=2)
    pt_hist = reweight(pth, model.direction.sign)
    pt_time = time.monotonic() - t0
    pt_dev, _ = entropy_divergence(pt_hist, exact, mass_coverage=0.99)

    ok = (diag["converged"] and wl_dev <= 0.3 and pt_dev <= 0.3
          and wl_time < 300 and pt_time < 300)
    gate(1, "flat-histogram and tempered entropies within 0.3 nats "
            "of brute force over 99% of the mass, under 5 minutes", ok,
         f"wl dev {wl_dev:.3f} in {wl_time:.1f}s, "
         f"pt dev {pt_dev:.3f} in {pt_time:.1f}s")


def test_2_sampled_pr_close_to_exact(tmp_path):
    space, grid = toy_space(4), toy_grid(4)
    model = SumEnergy(space)
    oracle = ModuloAnnotator(30)
    hist, reservoir, _ = wang_landau_run(
        space, model, grid, ProposalKernel(), WLConfig(), rng_seed=3,
        reservoir_capacity=30)
    store = AnnotationStore(tmp_path)
    store.create_tasks("run", reservoir, per_bin_quota=30)
    store.auto_annotate("run", oracle)
    sampled_r, _ = store.merge_to_precision("run", grid)
    sampled_rho = hist.normalize_to_space(space)

    exact_rho = exact_output_distribution(space, model, grid)
    exact_r = exact_precision_per_bin(space, model, oracle, grid)

    window = Window(grid.z_min, grid.z_max)
    a_sampled = aupr(pr_curve(sampled_r, sampled_rho, LOWER, window))
    a_exact = aupr(pr_curve(exact_r, exact_rho, LOWER, window))

    full_bins = [b for b in reservoir.bin_indices()
                 if reservoir.size(b) >= 30]
    r_devs = [abs(sampled_r.r[b] - exact_r.r[b]) for b in full_bins]
    ok = (abs(a_sampled - a_exact) <= 0.05
          and full_bins and max(r_devs) <= 0.1)
    gate(2, "sampled-pipeline AUPR within 0.05 of brute force and per-bin "
            "precision within 0.1 on fully quota'd bins", ok,
         f"aupr {a_sampled:.4f} vs {a_exact:.4f}, "
         f"max r dev {max(r_devs):.3f} over {len(full_bins)} bins")


@pytest.mark.slow
def test_3_full_enumeration_matches_counting():
    space, grid = toy_space(8), toy_grid(8)
    model = SumEnergy(space)
    via_dp = exact_output_distribution(space, model, grid, method="dp")
    via_enum = exact_output_distribution(space, model, grid,
                                         method="enumerate")
    dev = np.max(np.abs(np.nan_to_num(via_dp.log_counts - via_enum.log_counts,
                                      nan=0.0)))
    gate(3, "enumerating all 10^8 sequences reproduces the combinatorial "
            "count bin for bin", bool(dev < 1e-9), f"max log dev {dev:.2e}")


class _CycleKernel(ProposalKernel):
    """Asymmetric proposal that wrongly claims symmetry (negative control)."""

    def propose(self, model, seq, rng):
        work = np.asarray(seq).copy()
        pos = int(rng.integers(0, len(work)))
        work[pos] = (work[pos] + 1) % model.space.vocab_size
        return work, 0.0


def test_4_chain_stationarity():
    model = SumEnergy(InputSpace(vocab_size=4, length=2))
    _, p_uniform = stationarity_test(
        model, ProposalKernel(KernelKind.SINGLE_SITE_UNIFORM),
        temperature=2.0, steps=40_000, rng_seed=0)
    _, p_informed = stationarity_test(
        model, ProposalKernel(KernelKind.SHARED_BETA_INFORMED),
        temperature=2.0, steps=40_000, rng_seed=1)
    _, p_broken = stationarity_test(model, _CycleKernel(), temperature=2.0,
                                    steps=40_000, rng_seed=2)
    ok = p_uniform > 0.01 and p_informed > 0.01 and p_broken < 0.01
    gate(4, "both kernels pass the Boltzmann occupancy test and a seeded "
            "asymmetric kernel fails it", ok,
         f"p uniform {p_uniform:.3f}, informed {p_informed:.3f}, "
         f"broken {p_broken:.2e}")


def test_5_tp_fp_identity():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 12))
        grid = BinGrid(0.0, float(n), 1.0)
        log_rho = rng.uniform(-50, 50, size=n)
        rho = OutputDistribution(grid, log_rho)
        r = PrecisionPerBin(grid, rng.uniform(size=n))
        direction = LOWER if rng.random() < 0.5 else \
            Direction.HIGHER_IS_CONFIDENT
        window = Window(0.0, float(n))
        for lam, tp, fp in roc_unnormalized(r, rho, direction, window):
            ks = included_bins(grid, lam, direction, window)
            total = np.exp(log_rho[ks]).sum()
            worst = max(worst, abs(tp + fp - total) / total)
    gate(5, "TP + FP equals cumulative mass to 1e-9 relative on 100 random "
            "instances", bool(worst < 1e-9), f"worst rel err {worst:.2e}")


class _LookupModel(EnergyModel):
    def __init__(self, table, name):
        self.table = np.asarray(table, dtype=float)
        self.space = InputSpace(vocab_size=len(self.table), length=1)
        self.name = name

    def score(self, seq):
        return float(self.table[int(np.asarray(seq)[0])])


def test_6_cross_model_ratio():
    # ground truth: model A maps 500 inputs into the window, model B 200,
    # and 100 inputs are in-window under both
    table_a = np.where(np.arange(1000) < 500, 0.0, 10.0)
    table_b = np.where((np.arange(1000) >= 400) & (np.arange(1000) < 600),
                       0.0, 10.0)
    a, b = _LookupModel(table_a, "a"), _LookupModel(table_b, "b")
    window = Window(-1.0, 1.0)
    rng = np.random.default_rng(6)
    samples_a = [([int(t)], 0.0) for t in rng.choice(500, 50, replace=False)]
    samples_b = [([int(t)], 0.0)
                 for t in 400 + rng.choice(200, 50, replace=False)]
    report = build_overlap_report(samples_a, a, samples_b, b, window)
    _, _, ratio = normalized_scales(report)
    swapped = OverlapReport(window, report.second, report.first)
    recip = normalized_scales(swapped)[2]
    truth = 500 / 200
    ok = abs(ratio - truth) / truth <= 0.2 and ratio * recip == 1.0
    gate(6, "50-sample overlap ratio within 20% of the true 2.5 and exactly "
            "reciprocal under swap", ok, f"ratio {ratio:.3f}")


def test_7_two_bin_hand_arithmetic():
    grid = BinGrid(1.0, 3.0, 1.0)
    rho = OutputDistribution(grid, np.log([10.0, 90.0]),
                             NormalizationState.NORMALIZED_TO_SPACE)
    r = PrecisionPerBin(grid, np.array([0.5, 0.1]))
    p = precision_at(2.0, r, rho, LOWER)
    unnorm, norm = recall_at(2.0, r, rho, LOWER)
    unnorm1, _ = recall_at(1.0, r, rho, LOWER)
    ok = (abs(p - 0.14) < 1e-12 and abs(unnorm - 14.0) < 1e-9
          and abs(norm - 1.0) < 1e-12 and abs(unnorm1 - 5.0) < 1e-9)
    gate(7, "two-bin worked example reproduced exactly", ok,
         f"precision {p:.6f}, recall {unnorm:.6f}")


def test_8_external_scoring_round_trip(tmp_path):
    space = InputSpace(vocab_size=8, length=6)
    rng = np.random.default_rng(8)
    corpus = [rng.integers(0, 8, size=6) for _ in range(60)]
    model = NGramModel(space, order=2, alpha=0.3).fit(corpus)
    path = tmp_path / "model.json"
    path.write_text(model.to_json())
    probes = np.array([rng.integers(0, 8, size=6) for _ in range(50)])
    with ExternalModel([sys.executable, "-m", "omniinput.external",
                        f"ngram:{path}"], space) as ext:
        got = ext.score_batch(probes)
    dev = float(np.max(np.abs(got - model.score_batch(probes))))
    gate(8, "out-of-process scoring matches in-process to 1e-6", dev <= 1e-6,
         f"max dev {dev:.2e}")
