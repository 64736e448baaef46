"""
Tests for the command-line driver.
"""
import json
from fractions import Fraction

import mpmath
import pytest
import yaml
from pydantic import ValidationError

from src.catalogue import EXAMPLES
from src.cli import build_parser, config_from_args, main, mirror_residue_series, run
from src.config import JobConfig, merge_overrides
from src.exceptions import EXIT_OK, EXIT_VALIDATION
from src.utils import to_mpc


def _args(*argv):
    return config_from_args(build_parser().parse_args(list(argv)))


@pytest.mark.unit
def test_example_and_file_targets(tmp_path):
    """Test that a target with a file suffix is read as an input path."""
    by_id = _args('df', 'normal-cone-p1', '--k', '4')
    by_file = _args('df', str(tmp_path / 'tc.json'))

    # Verify
    assert by_id.example == 'normal-cone-p1' and by_id.input_path is None
    assert by_id.k == 4
    assert by_file.example is None and by_file.input_path.endswith('tc.json')


@pytest.mark.unit
def test_job_file_with_flag_overrides(tmp_path):
    """Test that flags override the values of a YAML job file."""
    # Test data
    job = tmp_path / 'job.yaml'
    job.write_text(yaml.safe_dump({"k": 4, "seed": 3, "k_list": [2, 4]}))

    config = _args('vanishing', 'normal-cone-p1', '--config', str(job), '--seed', '5', '--skip-mirror')

    # Verify
    assert config.k == 4
    assert config.k_list == [2, 4]
    assert config.solver.seed == 5
    assert config.mirror_residue is False


@pytest.mark.unit
def test_invalid_settings():
    """Test that a precision below double is rejected."""
    with pytest.raises(ValidationError):
        merge_overrides({}, {"command": "df", "precision": 20})
    with pytest.raises(ValidationError):
        JobConfig(command='fit')


@pytest.mark.integration
def test_df_command(test_env, capsys):
    """Test the df command end to end."""
    status = main(['df', 'normal-cone-p1', '--out', str(test_env)])

    report = json.loads(capsys.readouterr().out)

    # Verify
    assert status == EXIT_OK
    assert report["intersection"] == report["localised"] == report["polytope"] == "1/4"
    assert (test_env / 'df_normal-cone-p1.json').exists()
    assert (test_env / 'df_normal-cone-p1.txt').exists()


@pytest.mark.integration
def test_df_from_input_file(tmp_path):
    """Test a test configuration read from a JSON file."""
    # Test data
    path = tmp_path / 'p1.json'
    path.write_text(json.dumps({
        "kind": "normal_cone", "fan": {"rays": [[1], [-1]], "max_cones": [[0], [1]]},
        "polarisation": ["1/2", "1/2"], "center": [0], "r": "1/2",
    }))

    status, report = run(_args('df', str(path), '--out', str(tmp_path)))

    assert status == EXIT_OK
    assert report["intersection"] == "1/4"


@pytest.mark.integration
def test_polytope_dual(tmp_path):
    """Test the polar dual of the catalogued polygon."""
    status, report = run(_args('polytope', 'P', '--action', 'dual', '--out', str(tmp_path)))

    dual = {tuple(Fraction(x) for x in v) for v in report["dual"]}

    # Verify
    assert status == EXIT_OK
    assert dual == {(2, -1), (-1, 2), (-1, 0), (0, -1)}


@pytest.mark.integration
def test_mirror_keeps_file_scale(tmp_path):
    """Test that a potential read from a file keeps its own k."""
    # Test data
    path = tmp_path / 'w.json'
    path.write_text(json.dumps({"k": "4", "terms": [{"exp": [1, 0]}, {"exp": [0, 1]}, {"exp": [-1, -1]}]}))

    status, report = run(_args('mirror', str(path), '--k', '8', '--out', str(tmp_path)))

    # Verify
    assert status == EXIT_OK
    assert report["potential"]["k"] == "4"
    assert "theta" not in report


@pytest.mark.integration
def test_unknown_example(tmp_path, capsys):
    """Test the structured error of an unknown example id."""
    status = main(['df', 'no-such-example', '--out', str(tmp_path)])

    payload = json.loads(capsys.readouterr().out)

    # Verify
    assert status == EXIT_VALIDATION
    assert payload["error"] == "ToricError"
    assert "normal-cone-p1" in payload["known"]
    assert (tmp_path / 'df_no-such-example_error.json').exists()


@pytest.mark.integration
def test_invalid_input_file(tmp_path):
    """Test that a file failing its schema exits with the validation code."""
    path = tmp_path / 'bad.json'
    path.write_text(json.dumps({"kind": "flip", "fan": {"rays": [[1]], "max_cones": [[0]]}, "polarisation": [1]}))

    status, payload = run(_args('df', str(path), '--out', str(tmp_path)))

    assert status == EXIT_VALIDATION
    assert payload["error"] == "ValidationError"


@pytest.mark.integration
def test_vanishing_with_mirror_series(tmp_path, mocker):
    """Test the vanishing command with the mirror residue replaced by its limit."""
    mirror = mocker.patch('src.cli.df_mirror_residue', return_value=Fraction(1, 4))

    status, report = run(_args('vanishing', 'normal-cone-p1', '--k-list', '4', '8', '--out', str(tmp_path)))

    # Verify
    assert status == EXIT_OK
    assert mirror.call_count == 2
    assert report["mirror"]["k"] == ["4", "8"]
    assert report["mirror"]["holds"]
    assert report["toric"]["holds"]


@pytest.mark.slow
def test_polytope_equivalence(tmp_path):
    """Test the unimodular equivalence of the threefold ray polytope with KS82."""
    status, report = run(_args('polytope', 'KS82', '--action', 'equivalent', '--compare-with', 'threefold',
                               '--out', str(tmp_path)))

    assert status == EXIT_OK
    assert report["equivalent"]


@pytest.mark.slow
def test_reproduce_threefold(tmp_path):
    """Test that every golden value of the threefold example is reproduced."""
    status, report = run(_args('reproduce', 'threefold-slope-unstable', '--out', str(tmp_path)))

    # Verify
    assert status == EXIT_OK
    assert report["passed"], report["diff"]
    assert (tmp_path / 'reproduce_threefold-slope-unstable.csv').exists()


def _fast_job(tmp_path, settings):
    job = tmp_path / 'job.yaml'
    job.write_text(yaml.safe_dump({"solver": settings.model_dump()}))
    return str(job)


@pytest.mark.slow
@pytest.mark.numeric
@pytest.mark.parametrize("name", ['normal-cone-p1', 'hirzebruch-product'])
def test_reproduce_surface(name, tmp_path, fast_settings):
    """Test that every golden value of a surface example is reproduced, base points included."""
    status, report = run(_args('reproduce', name, '--config', _fast_job(tmp_path, fast_settings),
                               '--out', str(tmp_path)))

    # Verify
    assert status == EXIT_OK
    assert report["passed"], report["diff"]
    checks = {c["check"]: c for c in report["checks"]}
    assert checks["base_points"]["actual"] == sorted(EXAMPLES[name].base_points)


@pytest.mark.slow
@pytest.mark.numeric
def test_theorem1_command(tmp_path, fast_settings):
    """Test that the assembly command solves both duals of the normal-cone example."""
    status, report = run(_args('theorem1', 'normal-cone-p1', '--k', '16', '--config',
                               _fast_job(tmp_path, fast_settings), '--out', str(tmp_path)))

    # Verify
    assert status == EXIT_OK
    assert len(report["duals"]) == 2
    assert report["prescribed_table"]["holds"]


@pytest.mark.slow
@pytest.mark.numeric
def test_mirror_residue_series_converges(normal_cone_tc, fast_settings):
    """Test that the mirror residue approaches DF = 1/4 without increasing its error over k."""
    with mpmath.workprec(fast_settings.precision_bits):
        series = mirror_residue_series(normal_cone_tc, [4, 8, 12, 16], fast_settings)
        errors = [abs(to_mpc(value) - mpmath.mpf(1) / 4) for _, value in series]

    # Verify
    assert [k for k, _ in series] == ["4", "8", "12", "16"]
    assert all(b <= a + mpmath.mpf('1e-20') for a, b in zip(errors, errors[1:]))
    assert errors[-1] <= 1e-3


@pytest.mark.unit
def test_markers_are_registered(pytestconfig):
    """Test that the suite's markers are declared in the pytest section."""
    names = {line.split(':')[0].strip() for line in pytestconfig.getini('markers')}

    assert {'unit', 'integration', 'slow', 'numeric'} <= names
