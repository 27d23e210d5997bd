import math

import numpy as np
import pytest

from tipwave import SystemParams
from tipwave.spectral import (
    CharFamily,
    HypothesisError,
    asymptotic_seed,
    char_residual,
    combined_abscissa,
    compute_spectrum,
    count_zeros_in_box,
    loop_families,
    refine_root,
    riesz_defect,
    spectral_abscissa,
    strip_interval,
    verify_strip_counts,
)

# abscissae at the reference gains, frozen from the package's own full
# sweep (|n| <= 100) and cross-checked by the argument principle
SWEPT_ABSCISSA = {"A2": -0.0228969413, "A": -0.4026362488, "Abb": -0.6720560519}


@pytest.fixture(scope="module", params=["A2", "A", "Abb"])
def family(request):
    return CharFamily(request.param, SystemParams())


@pytest.fixture(scope="module")
def spectra():
    p = SystemParams()
    return {tag: compute_spectrum(CharFamily(tag, p), n_max=100)
            for tag in ("A2", "A", "Abb")}


class TestResidual:
    def test_observer_error_family_at_origin(self):
        fam = CharFamily("A2", SystemParams())
        # LHS - RHS at 0: beta - (-beta) = 2 beta = 3.0
        assert char_residual(fam, 0.0) == pytest.approx(3.0, rel=1e-14)

    def test_state_feedback_family_at_origin(self):
        # (1+alpha) + (1-alpha) + (a-m)*0 = 2; the trailing term carries
        # the eigenvalue factor (dropping it would put a root in the
        # right half-plane, contradicting exponential stability)
        fam = CharFamily("A", SystemParams())
        assert char_residual(fam, 0.0) == pytest.approx(2.0, rel=1e-14)

    def test_pinned_error_family_at_i_pi(self):
        fam = CharFamily("Abb", SystemParams())
        value = char_residual(fam, 1j * math.pi)
        assert value == pytest.approx(-1j * math.pi, abs=1e-12)

    def test_origin_is_raw_zero_for_pinned_family(self):
        fam = CharFamily("Abb", SystemParams())
        assert char_residual(fam, 0.0) == 0.0

    def test_scaled_form_is_overflow_safe(self, family):
        value, scale = family.scaled(complex(-250.0, 4.0))
        assert np.isfinite(abs(value)) and np.isfinite(scale)
        # raw cosh/sinh overflow around |Re| ~ 710 for the pinned family
        value, scale = family.scaled(complex(-600.0, 1.0))
        assert np.isfinite(scale)


class TestSeeds:
    def test_observer_error_seed(self):
        fam = CharFamily("A2", SystemParams())
        seed = asymptotic_seed(fam, 10)
        assert seed.real == pytest.approx(-0.804719, abs=1e-6)
        assert seed.imag == pytest.approx(10 * math.pi, rel=1e-14)

    def test_state_feedback_seed(self):
        fam = CharFamily("A", SystemParams())
        seed = asymptotic_seed(fam, 0)
        assert seed == pytest.approx(complex(-0.423649, 0.0), abs=1e-6)
        assert seed.real == pytest.approx(0.5 * math.log(3.0 / 7.0), rel=1e-12)

    def test_pinned_error_seed_branch_rule(self):
        fam = CharFamily("Abb", SystemParams())  # gamma > 1: integer ladder
        seed = asymptotic_seed(fam, 3)
        assert seed == pytest.approx(complex(-0.804719, 3 * math.pi), abs=1e-6)
        low = CharFamily("Abb", SystemParams(gamma=0.5))
        assert low.seed(3).imag == pytest.approx(2.5 * math.pi, rel=1e-12)

    def test_half_offset_ladders(self):
        assert CharFamily("A2", SystemParams(gamma=0.5)).branch_offset() == 0.5
        assert CharFamily("A", SystemParams(m=1.0)).branch_offset() == 0.5

    def test_hypothesis_violations(self):
        with pytest.raises(HypothesisError):
            CharFamily("A2", SystemParams(gamma=1.0))
        with pytest.raises(HypothesisError):
            CharFamily("Abb", SystemParams(gamma=1.0))
        with pytest.raises(HypothesisError):
            CharFamily("A", SystemParams(m=2.0, a=2.0))
        with pytest.raises(ValueError):
            CharFamily("B", SystemParams())


class TestRefine:
    def test_residual_tolerance(self, family):
        eig = refine_root(family, family.seed(10))
        assert eig.converged and eig.residual <= 1e-10

    def test_conjugate_symmetry(self, family):
        up = refine_root(family, family.seed(12))
        down = refine_root(family, family.seed(12).conjugate())
        assert abs(down.refined - up.refined.conjugate()) < 1e-13

    def test_seed_distance_shrinks_like_inverse_n(self, family):
        base = refine_root(family, family.seed(10))
        c10 = 10 * abs(base.refined - base.seed)
        for n in (20, 40, 80):
            eig = refine_root(family, family.seed(n))
            assert abs(eig.refined - eig.seed) <= 1.5 * c10 / n


class TestCounting:
    def test_right_half_plane_empty(self, family):
        assert count_zeros_in_box(family, complex(0.05, -10.0), complex(5.0, 10.0)) == 0

    def test_tiny_box_around_refined_root_is_simple(self, family):
        eig = refine_root(family, family.seed(5))
        z = eig.refined
        assert count_zeros_in_box(family, z - (0.1 + 0.1j), z + (0.1 + 0.1j)) == 1

    def test_count_matches_enumeration_in_box(self, spectra):
        spec = spectra["A"]
        fam = spec.family
        # upper member of the displaced central pair + the first ladder root
        box_lo, box_hi = complex(-1.0, 0.05), complex(0.0, 4.0)
        inside = [e for e in spec.eigenvalues
                  if box_lo.real < e.refined.real < box_hi.real
                  and box_lo.imag < e.refined.imag < box_hi.imag]
        assert count_zeros_in_box(fam, box_lo, box_hi) == len(inside) == 2


class TestEigenfunctions:
    def test_pinned_left_end(self):
        fam = CharFamily("A", SystemParams())
        f, _ = fam.eigenfunction(refine_root(fam, fam.seed(3)).refined, 0.0)
        assert f == 0.0

    def test_pinned_right_end(self):
        fam = CharFamily("Abb", SystemParams())
        f, _ = fam.eigenfunction(refine_root(fam, fam.seed(3)).refined, 1.0)
        assert abs(f) < 1e-14

    def test_robin_condition_at_left_end(self, spectra):
        p = SystemParams()
        fam = spectra["A2"].family
        for eig in spectra["A2"].eigenvalues[::17]:
            lam = eig.refined
            f, fp = fam.eigenfunction(lam, 0.0)
            assert abs(fp - (p.gamma * lam + p.beta) * f) <= 1e-9 * (1 + abs(fp))


class TestSpectrum:
    def test_frozen_abscissae(self, spectra):
        for tag, spec in spectra.items():
            assert spectral_abscissa(spec) == pytest.approx(
                SWEPT_ABSCISSA[tag], abs=1e-8)

    def test_all_real_parts_negative(self, spectra):
        for spec in spectra.values():
            assert all(e.refined.real < 0 for e in spec.eigenvalues)

    def test_no_duplicates(self, spectra):
        for spec in spectra.values():
            vals = [e.refined for e in spec.eigenvalues]
            for i, a in enumerate(vals):
                for b in vals[i + 1:]:
                    assert abs(a - b) > 1e-6

    def test_conjugate_closed(self, spectra):
        for spec in spectra.values():
            vals = [e.refined for e in spec.eigenvalues]
            for z in vals:
                if abs(z.imag) > 1e-9:
                    assert min(abs(z.conjugate() - w) for w in vals) < 1e-12

    def test_origin_excluded_for_pinned_family(self, spectra):
        assert all(abs(e.refined) > 1e-6 for e in spectra["Abb"].eigenvalues)

    def test_combined_loop_abscissae(self, spectra):
        observer = combined_abscissa([spectra["A"], spectra["A2"]])
        eso = combined_abscissa([spectra["A"], spectra["Abb"]])
        assert observer == pytest.approx(SWEPT_ABSCISSA["A2"], abs=1e-8)
        assert eso == pytest.approx(SWEPT_ABSCISSA["A"], abs=1e-8)

    def test_loop_families_mapping(self):
        p = SystemParams()
        tags = [f.tag for f in loop_families("observer", p)]
        assert tags == ["A", "A2"]
        tags = [f.tag for f in loop_families("eso", p)]
        assert tags == ["A", "Abb"]
        with pytest.raises(ValueError):
            loop_families("cascade", p)

    def test_strip_counts_match(self, spectra):
        for spec in spectra.values():
            for k, counted, enumerated in verify_strip_counts(spec, 12):
                assert counted == enumerated, (spec.family.tag, k)

    @pytest.mark.parametrize("tag,params", [
        ("A2", SystemParams(gamma=0.5)),
        ("Abb", SystemParams(gamma=0.5)),
        ("A", SystemParams(m=1.0)),
    ])
    def test_half_offset_ladders_enumerate_completely(self, tag, params):
        spec = compute_spectrum(CharFamily(tag, params), n_max=20)
        assert all(e.residual <= 1e-10 for e in spec.eigenvalues)
        assert all(e.refined.real < 0 for e in spec.eigenvalues)
        for k, counted, enumerated in verify_strip_counts(spec, 10):
            assert counted == enumerated, (tag, k)

    def test_csv_columns(self, spectra, tmp_path):
        path = tmp_path / "spec.csv"
        spectra["A"].write_csv(path)
        header, first = path.read_text().splitlines()[:2]
        assert header == "n,seed_re,seed_im,refined_re,refined_im,residual"
        assert len(first.split(",")) == 6

    def test_strip_interval_tiles(self):
        lo0, hi0 = strip_interval(0)
        lo1, _ = strip_interval(1)
        assert hi0 == lo1 and lo0 == -hi0


class TestRieszDefect:
    def test_inverse_n_decay_of_defect(self, spectra):
        fam = spectra["A2"].family
        by_n = {e.n: e for e in spectra["A2"].eigenvalues if e.n >= 10}
        scaled = {n: n * riesz_defect(fam, by_n[n]) for n in (10, 25, 50, 100)}
        bound = 5.0 * scaled[10]
        assert all(v <= bound for v in scaled.values())

    def test_trace_components_decay(self, spectra):
        p = SystemParams()
        fam = spectra["A2"].family
        by_n = {e.n: e for e in spectra["A2"].eigenvalues}
        c10 = None
        for n in (10, 40, 100):
            lam = by_n[n].refined
            f0, _ = fam.eigenfunction(lam, 0.0)
            _, fp1 = fam.eigenfunction(lam, 1.0)
            comp3 = abs(p.beta * f0 / lam ** 2)
            comp4 = abs(fp1 / lam ** 3)
            if c10 is None:
                c10 = max(comp3, comp4) * 10
            assert comp3 <= 5.0 * c10 / n and comp4 <= 5.0 * c10 / n

    def test_symmetric_in_branch_sign(self, spectra):
        fam = spectra["A2"].family
        by_n = {}
        for e in spectra["A2"].eigenvalues:
            by_n.setdefault(e.n, e)
        assert riesz_defect(fam, by_n[15]) == pytest.approx(
            riesz_defect(fam, by_n[-15]), rel=1e-12)

    def test_only_observer_error_family(self, spectra):
        eig = spectra["A"].eigenvalues[0]
        with pytest.raises(ValueError):
            riesz_defect(spectra["A"].family, eig)

    def test_panel_floor(self, spectra):
        eig = [e for e in spectra["A2"].eigenvalues if e.n == 10][0]
        with pytest.raises(ValueError):
            riesz_defect(spectra["A2"].family, eig, panels=256)
