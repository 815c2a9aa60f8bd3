"""End-to-end command line behavior, run in-process through main()."""
from __future__ import annotations

import json

import numpy as np
import pytest

from pronlex import parse_lexicon
from pronlex.cli import main

from conftest import FIXTURES


def run(*argv: str) -> int:
    return main(list(argv))


def manifest_of(path) -> dict:
    return json.loads((path.parent / (path.name + ".manifest")).read_text())


class TestMerge:
    def test_three_sources(self, tmp_path):
        g2p = tmp_path / "g2p.lex"
        ref = tmp_path / "ref.lex"
        counts = tmp_path / "pd.counts"
        out = tmp_path / "merged.lex"
        g2p.write_text("w\tg2p\tAH\napple\tg2p\tAE P\n")
        ref.write_text("apple\tref\tAE P\n")
        counts.write_text("w\t50\tAH\nw\t10\tEY S\nw\t4\tIY\n")

        assert run("merge", "--g2p", str(g2p), "--ref", str(ref),
                   "--pd-counts", str(counts), "--out", str(out)) == 0
        assert out.read_text() == (
            "apple\tref\tAE P\n"   # ref wins the duplicate
            "w\tg2p\tAH\n"         # g2p wins over the decoded duplicate
            "w\tpd\tEY S\n"        # 10/50 = 0.2 passes the 0.1 cutoff; 4/50 fails
        )
        m = manifest_of(out)
        assert m["command"] == "merge"
        assert m["config"]["rel_freq_threshold"] == 0.1
        assert m["words"] == 2
        assert m["candidates_out"] == 3
        assert m["duration_seconds"] >= 0.0

    def test_g2p_alone(self, tmp_path):
        g2p = tmp_path / "g2p.lex"
        out = tmp_path / "merged.lex"
        g2p.write_text("w\tg2p\tAH\n")
        assert run("merge", "--g2p", str(g2p), "--out", str(out)) == 0
        assert out.read_text() == "w\tg2p\tAH\n"

    def test_no_inputs_is_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            run("merge", "--out", str(tmp_path / "x.lex"))
        assert exc.value.code == 2

    def test_missing_file(self, tmp_path, capsys):
        assert run("merge", "--g2p", str(tmp_path / "absent.lex"),
                   "--out", str(tmp_path / "x.lex")) == 1
        assert "error:" in capsys.readouterr().err


SELECT_LEXICON = (
    "ab\tg2p\tAH B\n"
    "ab\tpd\tEY B\n"
    "noev\tref\tN OW\n"
    "noev\tref\tN UW\n"
    "noev\tpd\tN IY\n"
)
SELECT_EVIDENCE = "".join(f"u{i:02d}\tab\t1.0\tAH B\n" for i in range(10))


class TestSelect:
    def write_inputs(self, tmp_path):
        lex = tmp_path / "cands.lex"
        evid = tmp_path / "obs.evidence"
        lex.write_text(SELECT_LEXICON)
        evid.write_text(SELECT_EVIDENCE)
        return lex, evid

    def test_select_with_trace_and_fallback(self, tmp_path):
        lex, evid = self.write_inputs(tmp_path)
        out = tmp_path / "learned.lex"
        trace = tmp_path / "trace.tsv"
        assert run("select", "--lexicon", str(lex), "--evidence", str(evid),
                   "--out", str(out), "--trace", str(trace)) == 0

        text = out.read_text()
        assert "ab\tg2p\tAH B\t1.000000\n" in text
        assert "EY B" not in text                     # unsupported, pruned
        assert "noev\tref\tN OW\t0.500000\n" in text  # no evidence: refs, uniform
        assert "noev\tref\tN UW\t0.500000\n" in text
        assert "N IY" not in text
        parse_lexicon(text)  # output is a valid probability lexicon

        trace_text = trace.read_text()
        assert "ab\tREMOVED\t" in trace_text
        assert "\tEY B" in trace_text
        assert "ab\tKEPT\t" in trace_text
        assert "noev" not in trace_text  # bypassed words leave no trace

        m = manifest_of(out)
        assert m["command"] == "select"
        assert m["config"]["jobs"] == 1
        assert m["config"]["delta"] == 1e-5
        assert m["config"]["alpha"] == {"g2p": 0.02, "pd": 0.01, "ref": 0.0}
        assert m["words"] == 2
        assert m["candidates_in"] == 5
        assert m["candidates_out"] == 3

    def test_zero_alpha_keeps_everything(self, tmp_path):
        lex, evid = self.write_inputs(tmp_path)
        out = tmp_path / "learned.lex"
        assert run("select", "--lexicon", str(lex), "--evidence", str(evid),
                   "--alpha-g2p", "0", "--alpha-pd", "0", "--alpha-ref", "0",
                   "--out", str(out)) == 0
        learned = parse_lexicon(out.read_text())
        assert len(learned.entries["ab"].candidates) == 2
        probs = dict(zip(
            [c.phones for c in learned.entries["ab"].candidates],
            learned.probabilities["ab"],
        ))
        assert probs[("AH", "B")] > 0.999
        assert probs[("EY", "B")] <= 0.001  # floored, not dropped

    def test_jobs_do_not_change_output(self, tmp_path):
        rng = np.random.default_rng(2026)
        lex_lines = []
        ev_lines = []
        for w in range(12):
            word = f"w{w:02d}"
            lex_lines.append(f"{word}\tg2p\tAH {w}\n")
            lex_lines.append(f"{word}\tpd\tEY {w}\n")
            for i in range(6):
                a, b = rng.uniform(0.2, 1.0, size=2)
                ev_lines.append(f"{word}_u{i}\t{word}\t{a:.6f}\tAH {w}\n")
                ev_lines.append(f"{word}_u{i}\t{word}\t{b:.6f}\tEY {w}\n")
        lex = tmp_path / "cands.lex"
        evid = tmp_path / "obs.evidence"
        lex.write_text("".join(lex_lines))
        evid.write_text("".join(ev_lines))

        outs = []
        for jobs in ("1", "3"):
            out = tmp_path / f"learned.{jobs}.lex"
            trace = tmp_path / f"trace.{jobs}.tsv"
            assert run("select", "--lexicon", str(lex), "--evidence", str(evid),
                       "--jobs", jobs, "--out", str(out), "--trace", str(trace)) == 0
            outs.append((out.read_bytes(), trace.read_bytes()))
        assert outs[0] == outs[1]

    def test_unknown_word_in_evidence(self, tmp_path, capsys):
        lex, _ = self.write_inputs(tmp_path)
        evid = tmp_path / "bad.evidence"
        evid.write_text("u1\tghost\t0.9\tG OW\n")
        assert run("select", "--lexicon", str(lex), "--evidence", str(evid),
                   "--out", str(tmp_path / "x.lex")) == 1
        err = capsys.readouterr().err
        assert "ghost" in err and "error:" in err

    def test_unknown_baseform_in_evidence(self, tmp_path, capsys):
        lex, _ = self.write_inputs(tmp_path)
        evid = tmp_path / "bad.evidence"
        evid.write_text("u1\tab\t0.9\tAH B\nu1\tab\t0.4\tZZ B\n")
        assert run("select", "--lexicon", str(lex), "--evidence", str(evid),
                   "--out", str(tmp_path / "x.lex")) == 1
        assert "ZZ B" in capsys.readouterr().err

    def test_bad_jobs_value(self, tmp_path, capsys):
        lex, evid = self.write_inputs(tmp_path)
        assert run("select", "--lexicon", str(lex), "--evidence", str(evid),
                   "--jobs", "0", "--out", str(tmp_path / "x.lex")) == 1
        assert "--jobs" in capsys.readouterr().err

    def test_empty_evidence_bypasses_all_words(self, tmp_path):
        lex, _ = self.write_inputs(tmp_path)
        evid = tmp_path / "empty.evidence"
        evid.write_text("")
        out = tmp_path / "learned.lex"
        trace = tmp_path / "trace.tsv"
        assert run("select", "--lexicon", str(lex), "--evidence", str(evid),
                   "--out", str(out), "--trace", str(trace)) == 0
        learned = parse_lexicon(out.read_text())
        # ab has no refs: its first g2p candidate survives
        assert [c.phones for c in learned.entries["ab"].candidates] == [("AH", "B")]
        assert trace.read_text() == ""


class TestBaseline:
    def test_pp_drops_minor_variant(self, tmp_path):
        lex = tmp_path / "cands.lex"
        evid = tmp_path / "obs.evidence"
        out = tmp_path / "pp.lex"
        lex.write_text("w\tg2p\tAH\nw\tpd\tEY\nnoev\tref\tN OW\nnoev\tg2p\tN AH\n")
        lines = []
        for i in range(18):
            lines.append(f"u{i:02d}\tw\t1.0\tAH\n")
        for i in range(18, 20):
            lines.append(f"u{i:02d}\tw\t1.0\tEY\n")
        evid.write_text("".join(lines))
        assert run("baseline", "--method", "pp", "--lexicon", str(lex),
                   "--evidence", str(evid), "--out", str(out)) == 0
        # weights ~ (0.9, 0.1): normalized minor 0.111 < 0.4; no-evidence
        # words fall back to their reference entries; no probability column
        assert out.read_text() == "noev\tref\tN OW\nw\tg2p\tAH\n"
        m = manifest_of(out)
        assert m["command"] == "baseline"
        assert m["config"]["method"] == "pp"
        assert m["config"]["pp_threshold"] == 0.4

    def test_pp_lower_threshold_keeps_minor(self, tmp_path):
        lex = tmp_path / "cands.lex"
        evid = tmp_path / "obs.evidence"
        out = tmp_path / "pp.lex"
        lex.write_text("w\tg2p\tAH\nw\tpd\tEY\n")
        lines = [f"u{i:02d}\tw\t1.0\tAH\n" for i in range(18)]
        lines += [f"u{i:02d}\tw\t1.0\tEY\n" for i in range(18, 20)]
        evid.write_text("".join(lines))
        assert run("baseline", "--method", "pp", "--lexicon", str(lex),
                   "--evidence", str(evid), "--pp-threshold", "0.05",
                   "--out", str(out)) == 0
        assert out.read_text() == "w\tg2p\tAH\nw\tpd\tEY\n"

    def test_pp_requires_evidence(self, tmp_path):
        lex = tmp_path / "cands.lex"
        lex.write_text("w\tg2p\tAH\n")
        with pytest.raises(SystemExit) as exc:
            run("baseline", "--method", "pp", "--lexicon", str(lex),
                "--out", str(tmp_path / "x.lex"))
        assert exc.value.code == 2

    def test_unknown_method_rejected(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            run("baseline", "--method", "magic", "--lexicon", "x",
                "--out", str(tmp_path / "x.lex"))
        assert exc.value.code == 2

    def test_g2p_one_best(self, tmp_path):
        lex = tmp_path / "cands.lex"
        out = tmp_path / "g2p1.lex"
        lex.write_text(
            "w\tg2p\tAH\nw\tg2p\tEY\nw\tpd\tIY\n"
            "v\tref\tOW\nv\tg2p\tUW\n"
        )
        assert run("baseline", "--method", "g2p1best", "--lexicon", str(lex),
                   "--out", str(out)) == 0
        assert out.read_text() == "v\tref\tOW\nv\tg2p\tUW\nw\tg2p\tAH\n"

    def test_g2p_one_best_names_bad_word(self, tmp_path, capsys):
        lex = tmp_path / "cands.lex"
        lex.write_text("only\tpd\tAH\n")
        assert run("baseline", "--method", "g2p1best", "--lexicon", str(lex),
                   "--out", str(tmp_path / "x.lex")) == 1
        assert "only" in capsys.readouterr().err


class TestSimulate:
    def test_fixture_run_is_deterministic(self, tmp_path):
        a = tmp_path / "a.evidence"
        b = tmp_path / "b.evidence"
        for out in (a, b):
            assert run("simulate", "--truth", str(FIXTURES / "us.truth"),
                       "--candidates", str(FIXTURES / "pair.lexicon"),
                       "--config", str(FIXTURES / "us.conf"),
                       "--out", str(out)) == 0
        assert a.read_bytes() == b.read_bytes()
        m = manifest_of(a)
        assert m["command"] == "simulate"
        assert m["config"]["seed"] == 1337
        assert m["words"] == 1
        assert m["utterances"] == 300

    def test_seed_override_changes_output(self, tmp_path):
        a = tmp_path / "a.evidence"
        b = tmp_path / "b.evidence"
        assert run("simulate", "--truth", str(FIXTURES / "us.truth"),
                   "--candidates", str(FIXTURES / "pair.lexicon"),
                   "--config", str(FIXTURES / "us.conf"), "--out", str(a)) == 0
        assert run("simulate", "--truth", str(FIXTURES / "us.truth"),
                   "--candidates", str(FIXTURES / "pair.lexicon"),
                   "--config", str(FIXTURES / "us.conf"), "--seed", "9",
                   "--out", str(b)) == 0
        assert a.read_bytes() != b.read_bytes()
        assert manifest_of(b)["config"]["seed"] == 9

    def test_bad_config_names_file(self, tmp_path, capsys):
        cfg = tmp_path / "bad.conf"
        cfg.write_text("confusability = 2.0\n")  # missing keys
        assert run("simulate", "--truth", str(FIXTURES / "us.truth"),
                   "--candidates", str(FIXTURES / "pair.lexicon"),
                   "--config", str(cfg), "--out", str(tmp_path / "x.evidence")) == 1
        err = capsys.readouterr().err
        assert "bad.conf" in err and "missing" in err


class TestEvaluate:
    def test_perfect_match(self, tmp_path, capsys):
        out = tmp_path / "report.tsv"
        assert run("evaluate", "--learned", str(FIXTURES / "us.truth"),
                   "--truth", str(FIXTURES / "us.truth"), "--out", str(out)) == 0
        stdout = capsys.readouterr().out
        assert "OVERALL" in stdout
        assert "average pronunciations per word: 2.0000" in stdout
        assert out.read_text() == "us\t1.000000\t1.000000\t1.000000\n"
        m = manifest_of(out)
        assert m["f1"] == 1.0
        assert m["words"] == 1

    def test_vocabulary_mismatch(self, tmp_path, capsys):
        assert run("evaluate", "--learned", str(FIXTURES / "us.truth"),
                   "--truth", str(FIXTURES / "machine.truth"),
                   "--out", str(tmp_path / "x.tsv")) == 1
        err = capsys.readouterr().err
        assert "machine" in err and "us" in err
