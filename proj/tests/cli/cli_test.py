"""End-to-end checks of the delta-infer and make-synthetic executables."""

import json
import os
import subprocess
import sys
import tempfile
import unittest
from pathlib import Path

import jsonschema

TOOLS = Path(sys.argv.pop(1))
SCHEMAS = Path(sys.argv.pop(1))
DELTA_INFER = TOOLS / "delta-infer"
MAKE_SYNTHETIC = TOOLS / "make-synthetic"


def run(*args, env=None, check=True):
    proc = subprocess.run([str(a) for a in args], capture_output=True, text=True, env=env)
    if check and proc.returncode != 0:
        raise AssertionError(f"{args} failed ({proc.returncode}): {proc.stderr}")
    return proc


def validate(report, name):
    schema = json.loads((SCHEMAS / f"{name}_report.schema.json").read_text())
    jsonschema.Draft202012Validator(schema).validate(report)


class CliTest(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.tmp = tempfile.TemporaryDirectory()
        cls.root = Path(cls.tmp.name)
        cls.model_dir = cls.root / "moving"
        run(MAKE_SYNTHETIC, "--out", cls.model_dir, "--size", "32", "--layers", "4", "--channels", "8",
            "--frames", "16", "--pnm")
        cls.model = cls.model_dir / "model.json"
        cls.video = cls.model_dir / "video.dct"
        cls.static_dir = cls.root / "static"
        run(MAKE_SYNTHETIC, "--out", cls.static_dir, "--size", "32", "--layers", "4", "--channels", "8",
            "--frames", "10", "--static")

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()

    def out(self, name):
        path = self.root / name
        path.mkdir(exist_ok=True)
        return path

    def load(self, path):
        return json.loads(Path(path).read_text())

    def test_run_report_and_outputs(self):
        out = self.out("run")
        run(DELTA_INFER, "run", "--model", self.model, "--frames", self.video, "--out", out)
        report = self.load(out / "run_report.json")
        validate(report, "run")
        self.assertEqual(report["frames"], 16)
        self.assertEqual(len(list(out.glob("frame_*.dct"))), 16)
        self.assertLess(report["steady_state"]["processed_tile_fraction"], 1.0)

    def test_static_video_skips_from_second_frame(self):
        out = self.out("static_run")
        run(DELTA_INFER, "run", "--model", self.static_dir / "model.json", "--frames",
            self.static_dir / "video.dct", "--out", out)
        report = self.load(out / "run_report.json")
        frames = report["per_frame"]
        self.assertEqual(frames[0]["processed_tile_fraction"], 1.0)
        for f in frames[1:]:
            self.assertEqual(f["tiles_processed"], 0)
            self.assertEqual(f["mac_performed"], 0)
        self.assertEqual(report["steady_state"]["processed_tile_fraction"], 0.0)

    def test_dense_flag_performs_every_mac(self):
        out = self.out("dense")
        run(DELTA_INFER, "run", "--model", self.model, "--frames", self.video, "--out", out, "--dense")
        report = self.load(out / "run_report.json")
        self.assertTrue(report["dense_mode"])
        for f in report["per_frame"]:
            self.assertEqual(f["mac_performed"], f["mac_dense_equivalent"])

    def test_report_is_deterministic_without_timing(self):
        reports = []
        for i in range(2):
            out = self.out(f"det{i}")
            run(DELTA_INFER, "run", "--model", self.model, "--frames", self.video, "--out", out, "--no-timing")
            reports.append((out / "run_report.json").read_text())
            self.assertNotIn("wall_seconds", reports[-1])
        self.assertEqual(reports[0], reports[1])
        a = (self.root / "det0" / "frame_00015.dct").read_bytes()
        b = (self.root / "det1" / "frame_00015.dct").read_bytes()
        self.assertEqual(a, b)

    def test_threads_from_environment(self):
        out = self.out("threads")
        env = dict(os.environ, DELTA_INFER_THREADS="3")
        run(DELTA_INFER, "run", "--model", self.model, "--frames", self.video, "--out", out, "--no-timing", env=env)
        threaded = self.load(out / "run_report.json")
        self.assertEqual(threaded["threads"], 3)
        serial_out = self.out("serial")
        run(DELTA_INFER, "run", "--model", self.model, "--frames", self.video, "--out", serial_out, "--no-timing",
            "--threads", "1", env=env)
        serial = self.load(serial_out / "run_report.json")
        self.assertEqual(serial["threads"], 1)
        self.assertEqual(serial["per_frame"], threaded["per_frame"])
        self.assertEqual((out / "frame_00010.dct").read_bytes(), (serial_out / "frame_00010.dct").read_bytes())

    def test_compare(self):
        proc = run(DELTA_INFER, "compare", "--model", self.model, "--frames", self.video, "--drift-window", "4")
        report = json.loads(proc.stdout)
        validate(report, "compare")
        self.assertLess(report["max_relative"], 1e-4)
        self.assertEqual(len(report["drift"]["window_max"]), 4)

    def test_compare_static_is_constant(self):
        out = self.out("static_compare")
        run(DELTA_INFER, "compare", "--model", self.static_dir / "model.json", "--frames",
            self.static_dir / "video.dct", "--out", out)
        report = self.load(out / "compare_report.json")
        first = report["per_frame"][0]["max_relative"]
        for f in report["per_frame"][1:]:
            self.assertEqual(f["max_relative"], first)
        self.assertFalse(report["drift"]["monotone_growth"])

    def test_tune_then_run_tuned_manifest(self):
        out = self.out("tune")
        run(DELTA_INFER, "tune", "--model", self.model, "--frames", self.video, "--budget", "0.03", "--out", out)
        report = self.load(out / "tune_report.json")
        validate(report, "tune")
        self.assertLessEqual(report["final_loss"] - report["baseline_loss"], 0.03)
        tuned = self.load(out / "tuned_manifest.json")
        eps = [l["epsilon"] for l in tuned["layers"] if l["type"] == "activation"]
        self.assertEqual(len(eps), len(report["epsilons"]))
        for a, b in zip(eps, report["epsilons"]):
            self.assertAlmostEqual(a, b, places=6)
        run_out = self.out("tuned_run")
        run(DELTA_INFER, "run", "--model", out / "tuned_manifest.json", "--frames", self.video, "--out", run_out)
        validate(self.load(run_out / "run_report.json"), "run")

    def test_bench(self):
        out = self.out("bench")
        run(DELTA_INFER, "bench", "--model", self.static_dir / "model.json", "--frames",
            self.static_dir / "video.dct", "--out", out, "--repetitions", "2")
        report = self.load(out / "bench_report.json")
        validate(report, "bench")
        self.assertEqual(report["delta"]["frames_timed"], 18)
        self.assertGreater(report["speedup"]["delta_vs_oracle"], 1.0)

    def test_bench_from_pnm_directory(self):
        proc = run(DELTA_INFER, "bench", "--model", self.model, "--frames", self.model_dir / "video_pnm",
                   "--raw-pixels", "--no-oracle", "--no-timing")
        report = json.loads(proc.stdout)
        validate(report, "bench")
        self.assertNotIn("oracle", report)

    def test_stats(self):
        proc = run(DELTA_INFER, "stats", "--model", self.model)
        report = json.loads(proc.stdout)
        validate(report, "stats")
        self.assertNotIn("run", report)
        out = self.out("stats")
        run(DELTA_INFER, "stats", "--model", self.model, "--frames", self.video, "--out", out)
        validate(self.load(out / "stats_report.json"), "stats")

    def test_errors_exit_nonzero_with_message(self):
        proc = run(DELTA_INFER, "run", "--model", self.model, "--frames", self.root / "absent.dct",
                   "--out", self.out("err"), check=False)
        self.assertNotEqual(proc.returncode, 0)
        self.assertIn("delta-infer:", proc.stderr)

        bad = self.root / "bad.json"
        bad.write_text("{ nope")
        proc = run(DELTA_INFER, "stats", "--model", bad, check=False)
        self.assertNotEqual(proc.returncode, 0)
        self.assertIn("delta-infer:", proc.stderr)

        proc = run(DELTA_INFER, "run", "--model", self.model, "--frames",
                   self.static_dir / "video.dct", "--out", self.out("err2"), check=False)
        self.assertEqual(proc.returncode, 0)

        other = self.root / "other"
        run(MAKE_SYNTHETIC, "--out", other, "--size", "16", "--layers", "2", "--channels", "4", "--frames", "2")
        proc = run(DELTA_INFER, "run", "--model", self.model, "--frames", other / "video.dct",
                   "--out", self.out("err3"), check=False)
        self.assertNotEqual(proc.returncode, 0)
        self.assertIn("shape", proc.stderr)

        proc = run(DELTA_INFER, "frobnicate", check=False)
        self.assertNotEqual(proc.returncode, 0)


if __name__ == "__main__":
    unittest.main(verbosity=2)
