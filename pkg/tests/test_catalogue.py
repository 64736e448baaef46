"""
Tests for the worked examples and the hexagon labels.
"""
from fractions import Fraction

import pytest

from src.catalogue import EXAMPLES, get_example, hexagon_point, s6_labels


@pytest.mark.unit
def test_hexagon_labels():
    """Test that blowing up p4 replaces it by two labelled points."""
    labels = s6_labels((4,))

    # Verify
    assert len(labels) == 7
    assert 'p4' not in labels
    assert labels["p4'"] == frozenset({(1, 0), (1, 1)})
    assert labels["p4''"] == frozenset({(1, 1), (0, 1)})
    assert labels['p1'] == hexagon_point(1) == frozenset({(-1, 0), (0, -1)})
    assert hexagon_point(6) == frozenset({(-1, 1), (-1, 0)})


@pytest.mark.unit
def test_label_lookup(normal_cone_example):
    """Test label and key lookups in both directions."""
    key = normal_cone_example.key('p3')

    assert normal_cone_example.label_of(key) == 'p3'
    assert normal_cone_example.label_of(frozenset({(5, 5)})) is None


@pytest.mark.unit
def test_examples_build():
    """Test that every catalogued example builds under its own name."""
    for name, example in EXAMPLES.items():
        if example.critical_points is None:
            continue
        assert example.build().name == name


@pytest.mark.unit
def test_groups_cover_labels():
    """Test that the groups of each surface example partition its fixed points."""
    for example in EXAMPLES.values():
        if not example.groups:
            continue
        members = [label for group in example.groups for label in group]
        assert sorted(members) == sorted(example.labels)


@pytest.mark.unit
def test_container_labels(normal_cone_example, hirzebruch_example):
    """Test that cones removed by a blow-up keep the hexagon label they had before it."""
    assert normal_cone_example.label_of(hexagon_point(4)) == 'p4'
    assert normal_cone_example.label_of(normal_cone_example.key("p4'")) == "p4'"
    assert hirzebruch_example.label_of(hexagon_point(3)) == 'p3'
    assert hirzebruch_example.label_of(hexagon_point(5)) == 'p5'
    assert EXAMPLES['threefold-slope-unstable'].label_of(hexagon_point(1)) is None


@pytest.mark.unit
def test_prescription_table_covers_first_group(normal_cone_example):
    """Test that the closed-form table is given on the first group only."""
    assert set(normal_cone_example.table) == set(normal_cone_example.groups[0])
    assert all(set(row) == {"e", "t"} for row in normal_cone_example.table.values())


@pytest.mark.unit
def test_unknown_example():
    """Test the lookup error for an unknown id."""
    assert get_example('normal-cone-p1').df == Fraction(1, 4)
    with pytest.raises(KeyError):
        get_example('not-an-example')
