import numpy as np
import pytest

from fpcavity import io
from fpcavity.errors import InputFormatError


def test_table_roundtrip(tmp_path):
    p = io.write_table(tmp_path / "t.csv", ["a", "b"], [(1.5, 2), (3.25, 4)], comments=["hello"])
    text = p.read_text()
    assert text.splitlines()[:2] == ["# hello", "a,b"]
    assert np.allclose(io.read_table(p), [[1.5, 2], [3.25, 4]])


def test_read_table_errors(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("x,y\n1,2\n3,z\n")
    with pytest.raises(InputFormatError):
        io.read_table(p)
    p.write_text("# only comments\n")
    with pytest.raises(InputFormatError):
        io.read_table(p)


def test_pgm_roundtrip(tmp_path):
    img = np.outer(np.hanning(20), np.hanning(30))
    p = io.write_pgm(tmp_path / "m.pgm", img, {"n": 0})
    back = io.read_pgm(p)
    assert back.shape == (20, 30)
    assert np.allclose(back, img / img.max(), atol=1 / 65535)
    assert (tmp_path / "m.json").exists()


def test_report_is_deterministic():
    r = {"b": np.float64(1 / 3), "a": [np.int64(2), float("nan")], "c": np.bool_(True)}
    assert io.dumps_report(r) == io.dumps_report(dict(reversed(list(r.items()))))
    assert '"a"' in io.dumps_report(r).splitlines()[1]
