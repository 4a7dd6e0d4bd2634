"""Developmental genome: 54 scalars (18 per morphogen), plus an optional
(eta, lambda) plasticity pair used by co-evolution condition C.

The 18 genes per morphogen cover secretion, diffusion, cross-inhibition,
decay, cell-fate thresholds and affinities, and axon-growth behaviour.  All
genes live in fixed, unit-scaled ranges (see ``MORPHOGEN_GENE_BOUNDS``);
sampling, mutation and crossover never leave those ranges.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields, replace

import numpy as np

# Per-gene (lo, hi) bounds.  Diffusion coefficients are capped at 0.25 per
# axis so the explicit 4-neighbour stencil stays non-oscillatory
# (d_x + d_y <= 0.5).
MORPHOGEN_GENE_BOUNDS: dict[str, tuple[float, float]] = {
    "s_prog": (0.0, 1.0),     # progenitor secretion rate, conc/step
    "s_diff": (0.0, 1.0),     # differentiated-cell secretion rate, conc/step
    "gamma": (0.0, 0.5),      # decay rate, 1/step
    "d_x": (0.0, 0.25),       # diffusion along columns, cells^2/step
    "d_y": (0.0, 0.25),       # diffusion along rows, cells^2/step
    "chi_a": (0.0, 2.0),      # cross-inhibition onto the next morphogen
    "chi_b": (0.0, 2.0),      # cross-inhibition onto the one after
    "th_div_lo": (0.0, 1.0),  # division window edge
    "th_div_hi": (0.0, 1.0),  # division window edge
    "th_diff": (0.0, 1.0),    # differentiation threshold
    "fate_w_in": (0.0, 1.0),  # fate affinity: input role
    "fate_w_hid": (0.0, 1.0),
    "fate_w_out": (0.0, 1.0),
    "alpha": (0.0, 2.0),      # axon chemotactic attraction
    "rho": (0.0, 5.0),        # connection-radius contribution, cells
    "c_coef": (0.0, 1.0),     # weight-init coefficient contribution
    "beta": (0.0, 3.0),       # out-degree contribution
    "tau": (0.0, 0.5),        # minimum target concentration to connect
}

GENE_NAMES: tuple[str, ...] = tuple(MORPHOGEN_GENE_BOUNDS)
N_MORPHOGENS = 3
N_DEVELOPMENTAL_GENES = N_MORPHOGENS * len(GENE_NAMES)  # 54


@dataclass(frozen=True)
class PlasticityParams:
    """Learning rate and weight decay of the online update rule.

    ``eta`` > 0 is a Hebbian rule, ``eta`` < 0 anti-Hebbian, ``eta`` == 0
    disables learning.  ``decay`` (serialized as "lambda") must be >= 0.
    """

    eta: float
    decay: float

    def __post_init__(self) -> None:
        if self.decay < 0:
            raise ValueError(f"decay must be >= 0, got {self.decay}")


@dataclass(frozen=True)
class PlasticityGeneBounds:
    """Admissible ranges for co-evolved plasticity genes."""

    eta: tuple[float, float]
    decay: tuple[float, float]


CARTPOLE_PLASTICITY_BOUNDS = PlasticityGeneBounds(eta=(-0.5, 0.5), decay=(0.0, 0.1))
ACROBOT_PLASTICITY_BOUNDS = PlasticityGeneBounds(eta=(-0.1, 0.1), decay=(0.0, 0.1))


@dataclass(frozen=True)
class MorphogenGenes:
    s_prog: float
    s_diff: float
    gamma: float
    d_x: float
    d_y: float
    chi_a: float
    chi_b: float
    th_div_lo: float
    th_div_hi: float
    th_diff: float
    fate_w_in: float
    fate_w_hid: float
    fate_w_out: float
    alpha: float
    rho: float
    c_coef: float
    beta: float
    tau: float

    def division_window(self) -> tuple[float, float]:
        """The division window as an ordered (lo, hi) pair.

        The two threshold genes are sampled independently, so the raw pair
        may come out reversed; consumers always see lo <= hi.
        """
        if self.th_div_lo <= self.th_div_hi:
            return self.th_div_lo, self.th_div_hi
        return self.th_div_hi, self.th_div_lo

    def values(self) -> tuple[float, ...]:
        return tuple(getattr(self, name) for name in GENE_NAMES)


assert tuple(f.name for f in fields(MorphogenGenes)) == GENE_NAMES


@dataclass(frozen=True)
class Genome:
    """Three morphogen gene blocks, optionally extended with plasticity genes."""

    morphogens: tuple[MorphogenGenes, MorphogenGenes, MorphogenGenes]
    plasticity: PlasticityParams | None = None

    @property
    def n_genes(self) -> int:
        return N_DEVELOPMENTAL_GENES + (2 if self.plasticity is not None else 0)

    def flat_values(self) -> tuple[float, ...]:
        out: list[float] = []
        for m in self.morphogens:
            out.extend(m.values())
        if self.plasticity is not None:
            out.extend((self.plasticity.eta, self.plasticity.decay))
        return tuple(out)

    def to_dict(self) -> dict:
        d = {
            f"m{i}": {name: getattr(m, name) for name in GENE_NAMES}
            for i, m in enumerate(self.morphogens)
        }
        if self.plasticity is not None:
            d["plasticity"] = {"eta": self.plasticity.eta, "lambda": self.plasticity.decay}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Genome":
        morphogens = tuple(
            MorphogenGenes(**{name: float(d[f"m{i}"][name]) for name in GENE_NAMES})
            for i in range(N_MORPHOGENS)
        )
        plasticity = None
        if d.get("plasticity") is not None:
            plasticity = PlasticityParams(
                eta=float(d["plasticity"]["eta"]), decay=float(d["plasticity"]["lambda"])
            )
        g = cls(morphogens=morphogens, plasticity=plasticity)  # type: ignore[arg-type]
        g.validate()
        return g

    def validate(self, plasticity_bounds: PlasticityGeneBounds | None = None) -> None:
        for i, m in enumerate(self.morphogens):
            for name in GENE_NAMES:
                lo, hi = MORPHOGEN_GENE_BOUNDS[name]
                v = getattr(m, name)
                if not (lo <= v <= hi):
                    raise ValueError(f"gene m{i}.{name}={v} outside [{lo}, {hi}]")
        if self.plasticity is not None:
            b = plasticity_bounds or CARTPOLE_PLASTICITY_BOUNDS
            if not (b.eta[0] <= self.plasticity.eta <= b.eta[1]):
                raise ValueError(f"eta gene {self.plasticity.eta} outside {b.eta}")
            if not (b.decay[0] <= self.plasticity.decay <= b.decay[1]):
                raise ValueError(f"lambda gene {self.plasticity.decay} outside {b.decay}")


def flat_gene_names(with_plasticity: bool) -> list[str]:
    names = [f"m{i}.{name}" for i in range(N_MORPHOGENS) for name in GENE_NAMES]
    if with_plasticity:
        names += ["eta", "lambda"]
    return names


def _genome_from_flat(values: list[float]) -> Genome:
    k = len(GENE_NAMES)
    if len(values) == N_DEVELOPMENTAL_GENES:
        plasticity = None
    elif len(values) == N_DEVELOPMENTAL_GENES + 2:
        plasticity = PlasticityParams(eta=values[-2], decay=values[-1])
    else:
        raise ValueError(f"expected 54 or 56 gene values, got {len(values)}")
    morphogens = tuple(
        MorphogenGenes(**dict(zip(GENE_NAMES, values[i * k : (i + 1) * k])))
        for i in range(N_MORPHOGENS)
    )
    return Genome(morphogens=morphogens, plasticity=plasticity)  # type: ignore[arg-type]


def sample_random(
    rng_seed: int,
    with_plasticity: bool = False,
    plasticity_bounds: PlasticityGeneBounds = CARTPOLE_PLASTICITY_BOUNDS,
) -> Genome:
    """Draw every gene independently and uniformly from its declared range."""
    rng = np.random.default_rng(rng_seed)
    morphogens = tuple(
        MorphogenGenes(
            **{name: rng.uniform(*MORPHOGEN_GENE_BOUNDS[name]) for name in GENE_NAMES}
        )
        for _ in range(N_MORPHOGENS)
    )
    plasticity = None
    if with_plasticity:
        plasticity = PlasticityParams(
            eta=rng.uniform(*plasticity_bounds.eta),
            decay=rng.uniform(*plasticity_bounds.decay),
        )
    return Genome(morphogens=morphogens, plasticity=plasticity)  # type: ignore[arg-type]


def _perturb(value: float, lo: float, hi: float, rate: float, rng) -> float:
    if rng.random() >= rate:
        return value
    sigma = 0.1 * (hi - lo)
    return float(np.clip(value + rng.normal(0.0, sigma), lo, hi))


def mutate(
    g: Genome,
    rate: float,
    rng_seed: int,
    plasticity_bounds: PlasticityGeneBounds = CARTPOLE_PLASTICITY_BOUNDS,
) -> Genome:
    """Per-gene Gaussian mutation at probability ``rate``, clamped to range.

    The noise scale is 10% of each gene's range width.  Plasticity genes,
    when present, use ``plasticity_bounds`` for both scale and clamp.
    """
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"mutation rate must be in [0, 1], got {rate}")
    rng = np.random.default_rng(rng_seed)
    morphogens = tuple(
        MorphogenGenes(
            **{
                name: _perturb(getattr(m, name), *MORPHOGEN_GENE_BOUNDS[name], rate, rng)
                for name in GENE_NAMES
            }
        )
        for m in g.morphogens
    )
    plasticity = None
    if g.plasticity is not None:
        plasticity = PlasticityParams(
            eta=_perturb(g.plasticity.eta, *plasticity_bounds.eta, rate, rng),
            decay=_perturb(g.plasticity.decay, *plasticity_bounds.decay, rate, rng),
        )
    return Genome(morphogens=morphogens, plasticity=plasticity)  # type: ignore[arg-type]


def crossover(a: Genome, b: Genome, rng_seed: int) -> Genome:
    """Uniform crossover: each gene from ``a`` or ``b`` with probability 1/2."""
    if (a.plasticity is None) != (b.plasticity is None):
        raise ValueError("cannot cross genomes of different shapes (54 vs 56 genes)")
    rng = np.random.default_rng(rng_seed)
    morphogens = tuple(
        MorphogenGenes(
            **{
                name: getattr(ma if rng.random() < 0.5 else mb, name)
                for name in GENE_NAMES
            }
        )
        for ma, mb in zip(a.morphogens, b.morphogens)
    )
    plasticity = None
    if a.plasticity is not None:
        assert b.plasticity is not None
        plasticity = PlasticityParams(
            eta=(a if rng.random() < 0.5 else b).plasticity.eta,
            decay=(a if rng.random() < 0.5 else b).plasticity.decay,
        )
    return Genome(morphogens=morphogens, plasticity=plasticity)  # type: ignore[arg-type]


def genome_hash(g: Genome) -> str:
    """Content hash of a genome (bit-exact in the gene values)."""
    payload = ",".join(repr(v) for v in g.flat_values())
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


# --- genome file format -------------------------------------------------
#
# One genome per line: 54 (or 56) comma-separated decimals, preceded by a
# header line naming each locus.  repr() round-trips doubles bit-exactly.


def write_genome_file(path, genomes: list[Genome]) -> None:
    if not genomes:
        with open(path, "w") as fh:
            fh.write("# " + ",".join(flat_gene_names(False)) + "\n")
        return
    with_plasticity = genomes[0].plasticity is not None
    for g in genomes:
        if (g.plasticity is not None) != with_plasticity:
            raise ValueError("a genome file must hold genomes of one shape")
    with open(path, "w") as fh:
        fh.write("# " + ",".join(flat_gene_names(with_plasticity)) + "\n")
        for g in genomes:
            fh.write(",".join(repr(v) for v in g.flat_values()) + "\n")


def read_genome_file(path) -> list[Genome]:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise ValueError(f"{path}: missing locus header line")
    header = [n.strip() for n in lines[0].lstrip("# ").split(",")]
    if header not in (flat_gene_names(False), flat_gene_names(True)):
        raise ValueError(f"{path}: unrecognised locus header")
    genomes = []
    for ln in lines[1:]:
        values = [float(tok) for tok in ln.split(",")]
        if len(values) != len(header):
            raise ValueError(f"{path}: line has {len(values)} values, header names {len(header)}")
        genomes.append(_genome_from_flat(values))
    return genomes


def with_plasticity_genes(g: Genome, params: PlasticityParams) -> Genome:
    return replace(g, plasticity=params)
