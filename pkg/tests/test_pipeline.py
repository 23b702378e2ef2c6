import numpy as np

from lgequant import io as lio
from lgequant.phantom import PhantomConfig, InfarctWedge, MvoPocket, default_wedge_config, generate
from lgequant.pipeline import PipelineConfig, run_pipeline


class TestNoiselessExactness:
    def test_wedge_labeling_equals_truth_exactly(self, tmp_path):
        cfg = default_wedge_config(seed=0, noise_sigma=0.0)
        ds, truth = generate(cfg)
        report = run_pipeline(
            ds, truth.contours, PipelineConfig(skip_realign=True),
            out_dir=tmp_path, truth={"infarct_mask": truth.infarct_mask},
        )
        labels, mask, _ = lio.load_labeling(tmp_path / "labeling.json")
        assert np.array_equal(labels == 1, truth.infarct_mask)
        assert report["reference"]["dice"] == 1.0


class TestReportContents:
    def test_in_memory_report_has_all_stages(self):
        cfg = PhantomConfig(seed=1, noise_sigma=0.05)
        ds, truth = generate(cfg)
        report = run_pipeline(ds, truth.contours, PipelineConfig(skip_realign=True))
        for stage in ("realign", "normalize", "classify", "postprocess", "quantify"):
            assert stage in report["stages"]
        curve = report["stages"]["normalize"]["relative_probability"]
        assert curve is not None and len(curve["bin_centers"]) == 64
        assert max(curve["values"]) == 1.0
        audit = report["stages"]["postprocess"]["audit"]
        assert [a["step"] for a in audit] == [
            "boundary_false_positives", "small_components",
            "partial_volume_recovery", "mvo_inclusion",
        ]

    def test_mvo_audit_reports_added_component(self):
        cfg = default_wedge_config(seed=2, noise_sigma=0.06)
        ds, truth = generate(cfg)
        report = run_pipeline(ds, truth.contours, PipelineConfig(skip_realign=True))
        mvo = report["stages"]["postprocess"]["audit"][-1]
        assert mvo["step"] == "mvo_inclusion"
        assert mvo["voxels_after"] > mvo["voxels_before"]
        assert len(mvo["added_components"]) >= 1
        assert mvo["added_components"][0]["volume_mm3"] > 0
