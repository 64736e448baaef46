"""
Named worked examples and the values they are expected to reproduce.

The two surface examples live on the hexagon S_6: the container of both
potentials is the reflexive hexagon, whose fixed points p1..p6 are the
cones spanned by consecutive facet normals. Points created by a blow-up
at p_i carry one prime (the cone keeping the earlier normal) or two.
"""
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Callable, Dict, FrozenSet, List, Optional, Tuple

from src.fans import P1_FAN, Fan
from src.lattice_core import LatticeVector
from src.testconfig import (
    ToricTestConfiguration, degeneration_to_normal_cone, product_test_configuration,
)
from src.toric_geom import ToricDivisor, anticanonical_divisor

Key = FrozenSet[LatticeVector]

HEXAGON_NORMALS = ((-1, 0), (0, -1), (1, -1), (1, 0), (0, 1), (-1, 1))


def hexagon_point(i: int) -> Key:
    """p_i = cone(n_i, n_{i+1}) with 1-based labels."""
    return frozenset({HEXAGON_NORMALS[i - 1], HEXAGON_NORMALS[i % 6]})


def _blown_up(i: int) -> Dict[str, Key]:
    a, b = HEXAGON_NORMALS[i - 1], HEXAGON_NORMALS[i % 6]
    e = (a[0] + b[0], a[1] + b[1])
    return {f"p{i}'": frozenset({a, e}), f"p{i}''": frozenset({e, b})}


def s6_labels(blown_up: Tuple[int, ...]) -> Dict[str, Key]:
    """Labels of the fixed points of S_6 blown up at the given hexagon points."""
    labels: Dict[str, Key] = {}
    for i in range(1, 7):
        if i in blown_up:
            labels.update(_blown_up(i))
        else:
            labels[f"p{i}"] = hexagon_point(i)
    return labels


# Bl_p P^2 (also the first Hirzebruch surface): rays in angular order, E = (1, 1)
BLOWUP_P2_FAN = Fan(((1, 0), (1, 1), (0, 1), (-1, -1)), ((0, 1), (1, 2), (2, 3), (0, 3)), 2)
EXCEPTIONAL_RAY = 1

# Polygon of Bl_p P^2 and its polar dual
P_POLYGON = ((1, 0), (0, 1), (1, 1), (-1, -1))
P_POLYGON_DUAL = ((2, -1), (-1, 2), (-1, 0), (0, -1))

# Threefold total space: reflexive polytope 82 of the Kreuzer-Skarke list and
# the ray set of the blow-up of E x {0} in Bl_p P^2 x P^1
KS82_VERTICES = ((1, 0, 0), (0, 1, 0), (0, -1, 0), (-1, 0, 0), (0, 0, 1), (1, 1, 0), (1, 0, -1))
THREEFOLD_VERTICES = ((1, 0, 0), (0, 1, 0), (1, 1, 0), (-1, -1, 0), (0, 0, 1), (0, 0, -1), (1, 1, 1))
THREEFOLD_DUAL_VERTICES = (
    (2, -1, 1), (-1, 2, 1), (-1, 0, 1), (0, -1, 1),
    (-1, 0, 0), (0, -1, 0),
    (2, -1, -1), (-1, 2, -1), (1, -1, -1), (-1, 1, -1),
)

# 1/z + x + x' + x x' + 1/(x x') + z + z x x' in the variables (x, x', z)
THREEFOLD_POTENTIAL_EXPONENTS = (
    (0, 0, -1), (1, 0, 0), (0, 1, 0), (1, 1, 0), (-1, -1, 0), (0, 0, 1), (1, 1, 1),
)

POLYTOPES: Dict[str, Tuple[Tuple[int, ...], ...]] = {
    'P': P_POLYGON,
    'P-dual': P_POLYGON_DUAL,
    'KS82': KS82_VERTICES,
    'threefold': THREEFOLD_VERTICES,
    'threefold-dual': THREEFOLD_DUAL_VERTICES,
}


def normal_cone_p1() -> ToricTestConfiguration:
    """Degeneration to the normal cone of a point in P^1 with r = 1/2, polarised by -K/2."""
    L = ToricDivisor(P1_FAN, (Fraction(1, 2), Fraction(1, 2)))
    return replace(degeneration_to_normal_cone(P1_FAN, L, [0], Fraction(1, 2)), name='normal-cone-p1')


def hirzebruch_product() -> ToricTestConfiguration:
    """P(O + O(1)) over P^1 as a product configuration for the fibre P^1, polarised by -K/3."""
    L = anticanonical_divisor(BLOWUP_P2_FAN).scale(Fraction(1, 3))
    return product_test_configuration(BLOWUP_P2_FAN, (1, -1), L, name='hirzebruch-product')


def threefold_normal_cone() -> ToricTestConfiguration:
    """Degeneration to the normal cone of E in Bl_p P^2 with L = -K and r = 1."""
    L = anticanonical_divisor(BLOWUP_P2_FAN)
    tc = degeneration_to_normal_cone(BLOWUP_P2_FAN, L, [EXCEPTIONAL_RAY], 1, base_axis=2)
    return replace(tc, name='threefold-slope-unstable')


# Weights of v = (a, b) on the first dual of the normal-cone example, read
# off the dual bases of its four distinguished cones: p2 (-a-b, a),
# p3 (-b, a+b), p4' (a-b, b), p4'' (a, b-a). Each point records the Euler
# class e = det(grad v) and t = tr(grad v) - 1 at v = (1/3, 1/6); a = b
# makes the exceptional curve pointwise fixed.
NORMAL_CONE_TABLE_V = (Fraction(1, 3), Fraction(1, 6))
NORMAL_CONE_TABLE: Dict[str, Dict[str, Any]] = {
    'p2': {"e": Fraction(-1, 6), "t": Fraction(-7, 6)},
    'p3': {"e": Fraction(-1, 12), "t": Fraction(-2, 3)},
    "p4'": {"e": Fraction(1, 36), "t": Fraction(-2, 3)},
    "p4''": {"e": Fraction(-1, 18), "t": Fraction(-5, 6)},
}


@dataclass
class WorkedExample:
    """A named test configuration with the values a run must reproduce."""
    name: str
    build: Callable[[], ToricTestConfiguration]
    df: Fraction
    labels: Dict[str, Key] = field(default_factory=dict)
    critical_points: Optional[int] = None
    base_points: Tuple[str, ...] = ()
    theta: Optional[Fraction] = None
    psi_one: Tuple[str, ...] = ()
    group_totals: Tuple[Fraction, ...] = ()
    groups: Tuple[Tuple[str, ...], ...] = ()
    k: int = 8
    table: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    table_v: Tuple[Fraction, ...] = ()
    container_labels: Dict[str, Key] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    def key(self, label: str) -> Key:
        return self.labels[label]

    def label_of(self, key: Key) -> Optional[str]:
        """Label after the blow-ups, else the label of the container cone it was before them."""
        for labels in (self.labels, self.container_labels):
            for label, value in labels.items():
                if value == key:
                    return label
        return None


EXAMPLES: Dict[str, WorkedExample] = {
    'normal-cone-p1': WorkedExample(
        name='normal-cone-p1',
        build=normal_cone_p1,
        df=Fraction(1, 4),
        labels=s6_labels((4,)),
        critical_points=5,
        base_points=('p4',),
        theta=Fraction(1, 2),
        psi_one=('p1', 'p3', "p4'", 'p6'),
        group_totals=(Fraction(0), Fraction(1, 4)),
        groups=(('p2', 'p3', "p4'", "p4''"), ('p5', 'p6', 'p1')),
        table=NORMAL_CONE_TABLE,
        table_v=NORMAL_CONE_TABLE_V,
        container_labels=s6_labels(()),
    ),
    'hirzebruch-product': WorkedExample(
        name='hirzebruch-product',
        build=hirzebruch_product,
        df=Fraction(0),
        labels=s6_labels((3, 5)),
        critical_points=4,
        base_points=('p3', 'p5'),
        theta=Fraction(1, 3),
        psi_one=('p2', "p3'", "p5''", 'p6'),
        group_totals=(Fraction(0), Fraction(0)),
        groups=(('p2', "p3'", "p3''", 'p4'), ("p5'", "p5''", 'p6', 'p1')),
        container_labels=s6_labels(()),
    ),
    'threefold-slope-unstable': WorkedExample(
        name='threefold-slope-unstable',
        build=threefold_normal_cone,
        df=Fraction(4, 3),
        notes=['mirror-side residues are not computed for this example'],
    ),
}


def get_example(name: str) -> WorkedExample:
    """
    Look up a worked example by id.

    Raises:
        KeyError: for an unknown id
    """
    try:
        return EXAMPLES[name]
    except KeyError:
        raise KeyError(f"Unknown example '{name}', expected one of {sorted(EXAMPLES)}")