"""Partition error against ground truth and the experiment suites."""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .clusterer import Split, UnravelConfig, baseline_pca_cluster, unravel
from .fisher import overlap
from .mixture import LabeledSample, parallel_pancakes, random_affine, sample
from .separator import Method


@dataclass(frozen=True, eq=False)
class ErrorReport:
    """``confusion[l, i]`` is the fraction of mass from component i landing in leaf l.

    ``matching`` maps leaves to components; unmatched leaves count as error.
    """

    error: float
    confusion: np.ndarray
    matching: dict
    leaves: int

    def to_dict(self):
        return {
            "error": self.error,
            "confusion": self.confusion.tolist(),
            "matching": {str(k): int(v) for k, v in self.matching.items()},
            "leaves": self.leaves,
        }


def confusion_matrix(leaf_ids, labels, n_leaves, k):
    leaf_ids = np.asarray(leaf_ids, dtype=int)
    labels = np.asarray(labels, dtype=int)
    counts = np.zeros((n_leaves, k))
    np.add.at(counts, (leaf_ids, labels), 1.0)
    return counts / max(len(labels), 1)


def best_matching(confusion):
    """One-to-one leaf-to-component assignment of maximum total mass."""
    rows, cols = linear_sum_assignment(confusion, maximize=True)
    return {int(r): int(c) for r, c in zip(rows, cols)}


def error_report(leaf_ids, labels, n_leaves, k):
    conf = confusion_matrix(leaf_ids, labels, n_leaves, k)
    matching = best_matching(conf)
    matched = sum(conf[r, c] for r, c in matching.items())
    return ErrorReport(float(max(0.0, 1.0 - matched / conf.sum())), conf, matching, n_leaves)


def sample_error(partition, labeled, k):
    return error_report(partition.predict(labeled.points), labeled.labels, partition.n_leaves, k)


def partition_error(partition, mix, m_eval=100_000, seed=0):
    """Monte Carlo estimate of the mass falling outside the matched polyhedra."""
    if m_eval < 1000:
        raise ValueError("m_eval must be at least 1000")
    return sample_error(partition, sample(mix, m_eval, seed), mix.k)


def method_counts(partition):
    counts = {Method.MEAN_SHIFT.value: 0, Method.SPECTRAL.value: 0, "fallback": 0}
    for _, node in partition.splits():
        if node.choice is not None:
            counts[node.choice.method.value] += 1
        counts["fallback"] += int(node.fallback)
    return counts


def trial_seeds(seed, trial):
    """Independent (data, algorithm, evaluation) seeds for one trial."""
    return [int(s) for s in np.random.SeedSequence([seed, trial]).generate_state(3)]


@dataclass
class ExperimentResult:
    rows: list = field(default_factory=list)

    def mean_error(self, arm):
        errs = [r["error"] for r in self.rows if r["arm"] == arm]
        return float(np.mean(errs)) if errs else float("nan")

    def errors(self, arm):
        return np.array([r["error"] for r in self.rows if r["arm"] == arm])


def _row(trial, arm, partition, report):
    counts = method_counts(partition)
    return {
        "trial": trial,
        "arm": arm,
        "error": report.error,
        "leaves": partition.n_leaves,
        "mean_shift": counts[Method.MEAN_SHIFT.value],
        "spectral": counts[Method.SPECTRAL.value],
        "fallback": counts["fallback"],
    }


@dataclass
class InvarianceResult(ExperimentResult):
    @property
    def mean_error_original(self):
        return self.mean_error("original")

    @property
    def mean_error_transformed(self):
        return self.mean_error("transformed")

    def __iter__(self):
        return iter((self.mean_error_original, self.mean_error_transformed))


def affine_invariance_experiment(mix, amap, config, trials, m=100_000, m_eval=100_000, seed=0, baseline=False):
    """Run Unravel on samples of ``mix`` and on the same samples pushed through ``amap``.

    Both arms share the Gaussian draws of each trial, so the transformed arm
    sees exactly ``amap`` applied to the original points; evaluation samples are
    shared the same way.
    """
    if not amap.is_invertible():
        raise np.linalg.LinAlgError("affine map is singular")
    result = InvarianceResult()
    for trial in range(trials):
        s_data, s_alg, s_eval = trial_seeds(seed, trial)
        train = sample(mix, m, s_data)
        test = sample(mix, m_eval, s_eval)
        cfg = UnravelConfig(**{**config.__dict__, "seed": s_alg})
        moved = LabeledSample(amap(test.points), test.labels)
        for arm, pts, ev in (("original", train.points, test), ("transformed", amap(train.points), moved)):
            part = unravel(pts, cfg)
            result.rows.append(_row(trial, arm, part, sample_error(part, ev, mix.k)))
        if baseline:
            part = baseline_pca_cluster(amap(train.points), mix.k, seed=s_alg)
            result.rows.append(_row(trial, "baseline", part, sample_error(part, moved, mix.k)))
    return result


def clustering_trials(mix, config, trials, m=100_000, m_eval=100_000, seed=0, arm="unravel"):
    """Fresh samples of ``mix`` per trial, clustered and scored."""
    result = ExperimentResult()
    for trial in range(trials):
        s_data, s_alg, s_eval = trial_seeds(seed, trial)
        cfg = UnravelConfig(**{**config.__dict__, "seed": s_alg})
        part = unravel(sample(mix, m, s_data).points, cfg)
        result.rows.append(_row(trial, arm, part, partition_error(part, mix, m_eval, s_eval)))
    return result


def node_components(partition, mix):
    """Ground-truth components routed to each node, by where each mean falls.

    Returns a dict from node path to a tuple of component indices, for
    internal nodes and leaves alike.
    """
    out = {}

    def walk(node, path, comps):
        out[path] = tuple(comps)
        if not isinstance(node, Split) or not comps:
            return
        right = node.goes_right(mix.means[list(comps)])
        walk(node.left, path + (0,), [c for c, r in zip(comps, right) if not r])
        walk(node.right, path + (1,), [c for c, r in zip(comps, right) if r])

    walk(partition.root, (), list(range(mix.k)))
    return out


def submixture_overlap(mix, comps):
    if len(comps) < 2:
        return 0.0
    return overlap(mix.subset(comps))


def recursion_overlaps(partition, mix):
    """``(path, parent overlap, [child overlaps])`` for every internal node."""
    comps = node_components(partition, mix)
    rows = []
    for path, _ in partition.splits():
        parent = submixture_overlap(mix, comps[path])
        kids = [submixture_overlap(mix, comps[path + (b,)]) for b in (0, 1)]
        rows.append((path, parent, kids))
    return rows


def pancake_mixture(n=10, phi=1e-4, w1=0.5):
    """Pancakes with unit half-separation and thin width chosen so that the
    isotropic overlap equals ``phi`` (equal weights) or is close to it."""
    sigma = np.sqrt(phi / (1.0 - phi))
    return parallel_pancakes(n, 1.0, sigma, w1)


SUITES = ("pancakes", "invariance", "baseline")


def run_suite(name, trials, seed, n=10, m=100_000, m_eval=100_000, condition_number=1e3, phi=1e-4):
    """Named experiment suite; returns an ``ExperimentResult``."""
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {SUITES}")
    mix = pancake_mixture(n, phi)
    config = UnravelConfig(k=2, wmin=0.5)
    if name == "pancakes":
        return clustering_trials(mix, config, trials, m, m_eval, seed)
    amap = random_affine(n, condition_number, seed=seed)
    return affine_invariance_experiment(
        mix, amap, config, trials, m, m_eval, seed, baseline=(name == "baseline")
    )
