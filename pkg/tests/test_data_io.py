import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import trapezoid

from threshcal.core import InputError
from threshcal.data_io import (
    ParseError,
    RelationSpec,
    SyntheticSpec,
    bayes_accuracy,
    generate_split,
    generate_synthetic,
    load_scored_triples,
    parse_scored_lines,
    render_report_markdown,
    sigmoid_view,
    write_report_csv,
    write_scored_triples,
)
from threshcal.report import Cell, SweepReport


def _write(tmp_path, text, name="data.tsv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


class TestLoad:
    def test_positive_example(self, tmp_path):
        ds = load_scored_triples(_write(tmp_path, "Senegal\tpart_of\tWest_Africa\t2.31\t1\n"))
        (t,) = ds.triples
        assert (t.head, t.relation, t.tail, t.score, t.oracle_label) == ("Senegal", "part_of", "West_Africa", 2.31, True)

    def test_unlabeled_marker(self, tmp_path):
        (t,) = load_scored_triples(_write(tmp_path, "a\tr\tb\t0.0\t?\n")).triples
        assert t.oracle_label is None

    @pytest.mark.parametrize("line, fragment", [
        ("a\tr\tb\tNaN\t1", "non-finite"),
        ("a\tr\tb\tinf\t0", "non-finite"),
        ("a\tr\tb\tx\t1", "non-numeric"),
        ("a\tr\tb\t1.0\tyes", "bad label"),
        ("a\tr\tb\t1.0", "5 tab-separated"),
        ("a\t\tb\t1.0\t1", "empty relation"),
    ])
    def test_malformed_lines_name_the_line(self, tmp_path, line, fragment):
        p = _write(tmp_path, "# header comment\n" + line + "\n")
        with pytest.raises(ParseError) as exc:
            load_scored_triples(p)
        assert exc.value.line_no == 2
        assert fragment in str(exc.value)

    def test_duplicate_rejected(self, tmp_path):
        with pytest.raises(ParseError, match="duplicate"):
            load_scored_triples(_write(tmp_path, "a\tr\tb\t1\t1\na\tr\tb\t2\t0\n"))

    def test_comments_and_order(self, tmp_path):
        ds = load_scored_triples(_write(tmp_path, "#x\nb\tr\tc\t1\t0\n#y\na\tr\tc\t-1\t1\n"))
        assert [t.head for t in ds] == ["b", "a"]

    def test_empty_file(self, tmp_path):
        assert len(load_scored_triples(_write(tmp_path, ""))) == 0

    @settings(max_examples=50)
    @given(st.lists(
        st.tuples(
            st.text(st.characters(blacklist_categories=("Cc", "Cs")), min_size=0, max_size=5).filter(lambda s: not s.startswith("#")),
            st.text(st.characters(blacklist_categories=("Cc", "Cs")), min_size=1, max_size=5),
            st.floats(allow_nan=False, allow_infinity=False),
            st.sampled_from([True, False, None]),
        ),
        max_size=20,
        unique_by=lambda r: (r[0], r[1]),
    ))
    def test_roundtrip(self, rows):
        from threshcal.core import Dataset, ScoredTriple
        from threshcal.data_io import format_scored_triple

        ds = Dataset(tuple(ScoredTriple(h or "_", r, "t", s, y) for h, r, s, y in rows))
        text = "".join(format_scored_triple(t) for t in ds)
        assert parse_scored_lines(text.splitlines(keepends=True)) == ds

    def test_file_roundtrip(self, tmp_path):
        ds, _ = generate_synthetic(SyntheticSpec.uniform(3, 4, 4, 1.0, -1.0))
        p = tmp_path / "rt.tsv"
        write_scored_triples(ds, p)
        assert load_scored_triples(p) == ds


class TestSigmoidView:
    def test_zero(self):
        assert sigmoid_view([0.0])[0] == 0.5

    def test_large(self):
        assert abs(sigmoid_view([50.0])[0] - 1.0) <= 1e-15

    def test_symmetry(self):
        lo, hi = sigmoid_view([-1.0, 1.0])
        assert lo + hi == pytest.approx(1.0, abs=1e-15)


class TestSynthetic:
    def test_bayes_threshold_and_accuracy(self):
        _, info = generate_synthetic(SyntheticSpec.uniform(1, 10, 10, 2.0, -2.0, 1.0))
        assert info.thresholds["rel_00"] == 0.0
        # Phi(2) by numerical integration of the standard normal density
        x = np.linspace(-40.0, 2.0, 2_000_001)
        phi2 = trapezoid(np.exp(-x * x / 2) / math.sqrt(2 * math.pi), x)
        assert info.accuracies["rel_00"] == pytest.approx(phi2, abs=1e-9)
        assert info.accuracies["rel_00"] == pytest.approx(0.9772, abs=1e-4)

    def test_indistinguishable(self):
        assert bayes_accuracy(1.0, 1.0, 0.5) == 0.5

    def test_deterministic(self):
        spec = SyntheticSpec.uniform(4, 30, 20, 1.0, -1.0, 0.7, seed=99)
        a, _ = generate_synthetic(spec)
        b, _ = generate_synthetic(spec)
        assert a == b
        assert a.scores.tobytes() == b.scores.tobytes()

    def test_frozen_first_draws(self):
        # pins the documented generator (PCG64 + Generator.normal)
        ds, _ = generate_synthetic(SyntheticSpec.uniform(1, 2, 0, 0.0, 0.0, 1.0, seed=12345))
        expected = np.random.Generator(np.random.PCG64(12345)).normal(0.0, 1.0, size=2)
        assert sorted(ds.scores.tolist()) == sorted(expected.tolist())

    def test_class_means_converge(self):
        spec = SyntheticSpec(2, (RelationSpec(400, 300, 3.0, -1.0, 2.0), RelationSpec(50, 50, 0.0, -4.0, 0.5)), 7)
        ds, _ = generate_synthetic(spec)
        for r, rs in zip(sorted(ds.relations), spec.per_relation):
            mask = ds.relation_ids == r
            pos = ds.scores[mask & ds.labels]
            neg = ds.scores[mask & ~ds.labels]
            assert pos.size == rs.n_pos and neg.size == rs.n_neg
            assert abs(pos.mean() - rs.mu_pos) <= 3 * rs.sigma / math.sqrt(rs.n_pos)
            assert abs(neg.mean() - rs.mu_neg) <= 3 * rs.sigma / math.sqrt(rs.n_neg)

    def test_split_is_disjoint(self):
        calib, test, _ = generate_split(SyntheticSpec.uniform(2, 5, 5, 1.0, -1.0))
        assert not {t.key for t in calib} & {t.key for t in test}
        assert not np.array_equal(np.sort(calib.scores), np.sort(test.scores))

    @pytest.mark.parametrize("bad", [
        dict(n_relations=0, per_relation=()),
        dict(n_relations=1, per_relation=((1, 1, 0.0, 0.0, 0.0),)),
        dict(n_relations=1, per_relation=((-1, 1, 0.0, 0.0, 1.0),)),
        dict(n_relations=2, per_relation=((1, 1, 0.0, 0.0, 1.0),)),
    ])
    def test_invalid_spec(self, bad):
        with pytest.raises(InputError):
            SyntheticSpec(**bad)


class TestReportCsv:
    def _read(self, path):
        with open(path, newline="") as fh:
            return list(csv.reader(fh))

    def test_constant_metric(self, tmp_path):
        rep = SweepReport((Cell.aggregate("m", 5, None, [0.7] * 3, [0.7] * 3),))
        write_report_csv(rep, tmp_path / "r.csv")
        header, row = self._read(tmp_path / "r.csv")
        assert header[:7] == ["strategy", "budget", "repeats", "acc_mean", "acc_sem", "f1_mean", "f1_sem"]
        assert row[:7] == ["m", "5", "3", "0.700000", "0.000000", "0.700000", "0.000000"]

    def test_two_repeats_sem(self, tmp_path):
        rep = SweepReport((Cell.aggregate("m", 1, None, [0.6, 0.8], [0.5, 0.5]),))
        write_report_csv(rep, tmp_path / "r.csv")
        row = self._read(tmp_path / "r.csv")[1]
        assert row[3:5] == ["0.700000", "0.100000"]

    def test_sem_absent_for_single_repeat(self, tmp_path):
        rep = SweepReport((Cell.aggregate("m", 1, None, [0.6], [0.5]),))
        write_report_csv(rep, tmp_path / "r.csv")
        assert self._read(tmp_path / "r.csv")[1][4] == ""

    def test_rows_sorted(self, tmp_path):
        cells = [Cell.aggregate(m, b, None, [0.5, 0.5], [0.5, 0.5]) for m in ("b", "a") for b in (10, 2)]
        write_report_csv(SweepReport(tuple(cells)), tmp_path / "r.csv")
        rows = self._read(tmp_path / "r.csv")[1:]
        assert [(r[0], r[1]) for r in rows] == [("a", "2"), ("a", "10"), ("b", "2"), ("b", "10")]

    def test_empty_report(self, tmp_path):
        with pytest.raises(InputError):
            write_report_csv(SweepReport(()), tmp_path / "r.csv")

    def test_unwritable(self, tmp_path):
        rep = SweepReport((Cell.aggregate("m", 1, None, [0.6], [0.5]),))
        with pytest.raises(OSError):
            write_report_csv(rep, tmp_path / "missing" / "r.csv")

    def test_markdown(self):
        rep = SweepReport((
            Cell.aggregate("actc-lr-rndm", 1, 500, [0.70, 0.72], [0.7, 0.7]),
            Cell.aggregate("actc-lr-rndm", 10, 500, [0.80, 0.80], [0.8, 0.8]),
        ))
        md = render_report_markdown(rep)
        assert "| actc-lr-rndm | 76 | 75 |" in md
