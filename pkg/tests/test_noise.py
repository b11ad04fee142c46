# tests/test_noise.py
import numpy as np
import pytest
from pydantic import ValidationError

from app.core.exceptions import ConfigError, ProfileResolutionError
from app.core.noise import dephasing_profile, get_profile, list_profiles, resolve_profile, sample_erasure
from app.schemas.noise import NoiseOverride, NoiseProfile, NoiseTarget


def test_dephasing_table(root):
    table = resolve_profile(dephasing_profile(0.1), root)
    assert table.n_qubits == 18
    assert set(table.px) == {0.0}
    assert set(table.pz) == {0.1}


def test_defect_pair_overrides(root):
    table = resolve_profile(get_profile("defect-pair"), root)
    # Aresta compartilhada pelas faces 4 e 5
    assert table.px[11] == 1.0
    assert table.pz[11] == 0.0
    assert table.px[8] == pytest.approx(0.52)
    assert table.px[16] == pytest.approx(0.52)
    assert sum(1 for p in table.px if p == pytest.approx(0.52)) == 6
    assert table.px[0] == pytest.approx(0.02)
    assert table.pz[0] == pytest.approx(0.1)


def test_overrides_apply_in_order(root):
    profile = NoiseProfile(
        base_pz=0.1,
        overrides=[
            NoiseOverride(target="edge 0", set_pz=0.4),
            NoiseOverride(target="edge 0", add_pz=0.1),
        ],
    )
    assert resolve_profile(profile, root).pz[0] == pytest.approx(0.5)


def test_pz_clipped_against_px(root):
    profile = NoiseProfile(base_pz=0.5, overrides=[NoiseOverride(target="vertex 0", set_px=0.8)])
    table = resolve_profile(profile, root)
    for e in root.vertex_edges(0):
        assert table.px[e] == pytest.approx(0.8)
        assert table.pz[e] == pytest.approx(0.2)


def test_unknown_face_rejected(root):
    profile = NoiseProfile(overrides=[NoiseOverride(target="face 99", add_px=0.1)])
    with pytest.raises(ProfileResolutionError):
        resolve_profile(profile, root)


def test_compact_target_parsing():
    override = NoiseOverride(target="intersection 4 5", set_px=1.0)
    assert override.target == NoiseTarget(kind="intersection", labels=[4, 5])
    assert str(override.target) == "intersection 4 5"
    with pytest.raises(ValidationError):
        NoiseOverride(target="intersection 4", set_px=1.0)
    with pytest.raises(ValidationError):
        NoiseOverride(target="face", add_px=0.1)


def test_profile_id_ignores_description():
    a = NoiseProfile(name="x", description="um", base_pz=0.1)
    b = NoiseProfile(name="x", description="outro", base_pz=0.1)
    c = NoiseProfile(name="x", base_pz=0.2)
    assert a.profile_id() == b.profile_id()
    assert a.profile_id() != c.profile_id()


def test_library_lookup():
    assert "dephasing-0.1" in list_profiles()
    with pytest.raises(ConfigError):
        get_profile("nao-existe")


def test_erasure_sampling_statistics(root):
    table = resolve_profile(dephasing_profile(0.1), root)
    rng = np.random.default_rng(7)
    n_samples = 20_000
    erased = 0
    for _ in range(n_samples):
        sample = sample_erasure(table, rng)
        assert sample.realized_z <= sample.erased_z
        assert not sample.erased_x
        erased += len(sample.erased_z)
    mean = erased / (n_samples * 18)
    sigma = np.sqrt(0.1 * 0.9 / (n_samples * 18))
    assert abs(mean - 0.1) < 4 * sigma
