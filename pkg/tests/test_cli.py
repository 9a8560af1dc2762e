"""Command-line subcommands, exit codes and byte-reproducible outputs."""

import json

import numpy as np
import pytest

from spinflow.cli import EXIT_ERROR, EXIT_INCONCLUSIVE, EXIT_OK, RunConfig, main
from spinflow.oneform import cube_domain, domain_document
from spinflow.spectrum import Atom, SyntheticSpectrum, write_spectrum
from spinflow.synthetic import background, planted_instance, random_manifold_data


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    d = tmp_path_factory.mktemp("inputs")
    planted, _ = planted_instance(1, 2)
    (d / "planted.json").write_text(json.dumps(planted.to_json()))
    # tangential near miss at |s| = 0.005: the pipeline cannot decide it
    bg = tuple(background(np.random.default_rng(3)))
    miss = Atom(1, (0.805,), (-0.8,), (0.0,))
    near = SyntheticSpectrum(bg + (miss,), derivative_bound=max(a.deriv_sup() for a in bg + (miss,)))
    (d / "near.json").write_text(json.dumps(near.to_json()))
    write_spectrum(random_manifold_data(500, m=3, seed=2), d / "manifold.json")
    (d / "cube.json").write_text(json.dumps(domain_document(cube_domain(0.2))))
    return d


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


class TestIngest:
    def test_manifold(self, files, tmp_path, capsys):
        code, out, _ = run(capsys, "ingest", "--spectrum", files / "manifold.json", "-o", tmp_path)
        assert code == EXIT_OK
        info = json.loads((tmp_path / "ingest.json").read_text())
        assert info["torsion_order"] == 3 and info["geodesics"] > 0
        assert list((tmp_path / "cache").iterdir())

    def test_synthetic(self, files, tmp_path, capsys):
        code, out, _ = run(capsys, "ingest", "--spectrum", files / "planted.json", "-o", tmp_path)
        assert code == EXIT_OK and json.loads(out)["synthetic"]

    def test_checksum_mismatch(self, files, tmp_path, capsys):
        bad = tmp_path / "manifold.json"
        bad.write_bytes((files / "manifold.json").read_bytes() + b" ")
        (tmp_path / "manifold.json.sha256").write_text((files / "manifold.json.sha256").read_text())
        code, _, err = run(capsys, "ingest", "--spectrum", bad, "-o", tmp_path / "out")
        assert code == EXIT_ERROR and "checksum" in err.lower()


class TestCertify:
    def test_certified(self, files, tmp_path, capsys):
        code, out, _ = run(capsys, "certify", "--spectrum", files / "planted.json", "-o", tmp_path)
        assert code == EXIT_OK
        assert "R_{-1}" in out
        doc = json.loads((tmp_path / "certify_k0.json").read_text())
        assert doc["status"] == "certified" and doc["piercing"] == "(-,+)"

    def test_inconclusive(self, files, tmp_path, capsys):
        code, _, err = run(capsys, "certify", "--spectrum", files / "near.json", "-o", tmp_path)
        assert code == EXIT_INCONCLUSIVE
        assert "inconclusive" in err

    def test_byte_reproducible(self, files, tmp_path, capsys):
        for name in ("a", "b"):
            assert run(capsys, "certify", "--spectrum", files / "planted.json", "-o", tmp_path / name)[0] == EXIT_OK
        for name in ("certify_k0.json", "summary.txt"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_missing_file(self, tmp_path, capsys):
        code, _, err = run(capsys, "certify", "--spectrum", tmp_path / "nope.json")
        assert code == EXIT_ERROR and "not found" in err


class TestPlotAndOneform:
    def test_plot_j0(self, files, tmp_path, capsys):
        code, out, _ = run(capsys, "plot", "J0", "--spectrum", files / "planted.json", "--grid", 50, "-o", tmp_path)
        assert code == EXIT_OK
        lines = (tmp_path / "J0_k0.csv").read_text().splitlines()
        assert lines[0] == "tau,J0" and len(lines) == 51

    def test_plot_gamma(self, files, tmp_path, capsys):
        code, _, _ = run(capsys, "plot", "gamma_odd", "--spectrum", files / "manifold.json", "--grid", 20,
                         "--spinc", 1, "-o", tmp_path)
        assert code == EXIT_OK and (tmp_path / "gamma_odd_k1.csv").exists()

    def test_oneform(self, files, tmp_path, capsys):
        code, out, _ = run(capsys, "oneform", "--domain", files / "cube.json", "--iterations", 20, "-o", tmp_path)
        assert code == EXIT_OK and out.startswith("C_Y <= ")
        doc = json.loads((tmp_path / "oneform.json").read_text())
        assert doc["tetrahedra"] == 48
        first = (tmp_path / "oneform.json").read_bytes()
        run(capsys, "oneform", "--domain", files / "cube.json", "--iterations", 20, "-o", tmp_path)
        assert (tmp_path / "oneform.json").read_bytes() == first

    def test_oneform_needs_domain(self, capsys):
        assert run(capsys, "oneform")[0] == EXIT_ERROR


class TestVerify:
    def test_replays(self, files, tmp_path, capsys):
        run(capsys, "certify", "--spectrum", files / "planted.json", "-o", tmp_path)
        code, out, _ = run(capsys, "verify", tmp_path / "certify_k0.json")
        assert code == EXIT_OK and "replayed" in out

    def test_tampered(self, files, tmp_path, capsys):
        run(capsys, "certify", "--spectrum", files / "planted.json", "-o", tmp_path)
        doc = json.loads((tmp_path / "certify_k0.json").read_text())
        crossing = next(c for c in doc["certificates"] if c["kind"] == "crossing")
        sign = next(c for c in crossing["children"] if c["kind"] == "sign")
        sign["verdict"] = -sign["verdict"]
        (tmp_path / "bad.json").write_text(json.dumps(doc))
        code, _, err = run(capsys, "verify", tmp_path / "bad.json")
        assert code == EXIT_ERROR and "does not replay" in err


class TestConfig:
    def test_file_and_override(self, files, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"grid": 400, "seed": 3}))
        cfg = RunConfig.from_sources(str(cfg_path), {"seed": 9})
        assert (cfg.grid, cfg.seed) == (400, 9)

    def test_unknown_key(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"gird": 400}))
        with pytest.raises(ValueError, match="unknown config keys"):
            RunConfig.from_sources(str(cfg_path), {})

    def test_bad_value(self, capsys):
        assert run(capsys, "plot", "J0", "--grid", 3)[0] == EXIT_ERROR
