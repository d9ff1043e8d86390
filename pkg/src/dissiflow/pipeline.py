"""
Main analysis pipeline for dissiflow.

Runs the orbit census, builds the dissipative region, certifies the
splitting along dissipative saddles, checks attractors and estimates basins,
then writes the report bundle.
"""

import logging
import time
from contextlib import contextmanager
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np
import scipy

from . import __version__
from .analyzers.dissipative import (
    AttractorVerdict,
    BasinEstimate,
    MarkovTailTable,
    RegionApprox,
    TrappedSetTable,
    attractor_check,
    densified_samples,
    dissipative_region,
    markov_tail_probe,
    trapped_set_measure,
    weak_basin_estimate,
)
from .analyzers.linpoincare import CocycleBound, estimate_cocycle_bound
from .analyzers.periodic import OrbitCatalog, OrbitCensus, PeriodicOrbitFinder
from .analyzers.splitting import (
    SplittingCertificate,
    check_angle_bound,
    check_contraction_rate,
    check_dominated,
    check_hyperbolic,
    orbit_cocycle,
)
from .analyzers.surgery import SaddleData, full_report
from .config import AnalysisConfig
from .core.domain import DomainKind
from .core.regions import Neighborhood
from .exceptions import DissiflowError
from .reports.writers import ReportBundle, ReportWriter
from .validators import FieldValidator

logger = logging.getLogger(__name__)


class DissipativeFlowAnalyzer:
    """Main class running the analysis stages for one configured flow."""

    def __init__(self, config: Optional[AnalysisConfig] = None):
        self.config = config or AnalysisConfig()
        self.spec = self.config.build_flow()
        self.timings: Dict[str, float] = {}
        self.errors: List[Dict[str, Any]] = []
        logger.info(f"DissipativeFlowAnalyzer initialized for {self.spec.name}")

    @contextmanager
    def _stage(self, name: str) -> Iterator[None]:
        start = time.perf_counter()
        logger.info(f"Stage {name} started")
        try:
            yield
        finally:
            self.timings[name] = time.perf_counter() - start
            logger.info(f"Stage {name} finished in {self.timings[name]:.2f}s")

    def _record(self, stage: str, subject: str, error: DissiflowError) -> None:
        logger.debug(f"{stage} skipped {subject}: {error.reason}: {error.message}")
        self.errors.append({"stage": stage, "subject": subject, **error.to_dict()})

    # Stages

    def validate_field(self) -> None:
        with self._stage("validate"):
            FieldValidator(seed=self.config.seed).validate(self.spec)

    def census(self) -> OrbitCatalog:
        budgets, tols = self.config.budgets, self.config.tolerances
        with self._stage("census"):
            finder = PeriodicOrbitFinder(
                self.spec,
                self.config.integrator("census"),
                horizon=budgets.return_horizon,
                newton_tol=tols.newton,
                tol_eig=tols.eig,
            )
            census = OrbitCensus(
                finder,
                n_seeds=budgets.n_seeds,
                period_bound=budgets.period_bound,
                seed=self.config.seed,
                threads=budgets.threads,
                eps_dedup=tols.dedup,
                max_returns=budgets.max_returns,
                seed_width=budgets.seed_width,
            )
            return census.run()

    def region(self, catalog: OrbitCatalog) -> RegionApprox:
        with self._stage("region"):
            return dissipative_region(
                self.spec, catalog, self.config.basin.eps_fat, self.config.integrator()
            )

    def cocycle_bound(self) -> CocycleBound:
        certs = self.config.certificates
        with self._stage("cocycle-bound"):
            return estimate_cocycle_bound(
                self.spec,
                n_probes=certs.bound_probes,
                seed=self.config.seed,
                inflation=certs.inflation,
                integrator=self.config.integrator(),
            )

    def certificates(self, catalog: OrbitCatalog) -> List[SplittingCertificate]:
        """Angle bound over all saddles, then per dissipative saddle the contraction-rate,
        domination and hyperbolicity certificates."""
        certs = self.config.certificates
        results: List[SplittingCertificate] = []
        with self._stage("certificates"):
            if catalog.saddles:
                results.append(check_angle_bound(catalog, certs.alpha))
            for orbit in catalog.dissipative_saddles:
                try:
                    results.append(check_contraction_rate(orbit, certs.lambda_rate))
                    cocycle, directions = orbit_cocycle(
                        self.spec,
                        orbit,
                        horizon=certs.periods * orbit.period,
                        spacing=certs.spacing,
                        extra_offsets=(certs.T,),
                        integrator=self.config.integrator(),
                    )
                    results.append(check_dominated(cocycle, directions, certs.T, subject=orbit.name))
                    results.append(
                        check_hyperbolic(
                            cocycle, directions, certs.K, certs.lambda_exp, subject=orbit.name
                        )
                    )
                except DissiflowError as e:
                    self._record("certificates", orbit.name, e)
        return results

    def _trapping_neighborhood(self) -> Neighborhood:
        domain = self.spec.domain
        if domain.kind == DomainKind.BOX and domain.trapping is not None:
            return domain.trapping
        return Neighborhood.whole()

    def attractor_checks(self, catalog: OrbitCatalog) -> List[AttractorVerdict]:
        basin = self.config.basin
        verdicts = []
        with self._stage("attractors"):
            neighborhood = self._trapping_neighborhood()
            for orbit in catalog.sinks:
                try:
                    verdicts.append(
                        attractor_check(
                            self.spec,
                            orbit,
                            neighborhood,
                            horizon=basin.attractor_horizon,
                            tau_trap=basin.tau_trap,
                            eps=basin.attractor_eps,
                            n_boundary=basin.n_boundary,
                            n_interior=basin.n_interior,
                            seed=self.config.seed,
                            integrator=self.config.integrator("monte_carlo"),
                        )
                    )
                except DissiflowError as e:
                    self._record("attractors", orbit.name, e)
        return verdicts

    def basin(self, region: RegionApprox, name: str = "dissipative-region") -> BasinEstimate:
        basin, budgets = self.config.basin, self.config.budgets
        with self._stage(f"basin:{name}"):
            return weak_basin_estimate(
                self.spec,
                region,
                n_samples=basin.n_samples,
                t_transient=basin.t_transient,
                horizon=basin.horizon,
                seed=self.config.seed,
                check_spacing=basin.check_spacing,
                batch_size=budgets.batch_size,
                threads=budgets.threads,
                integrator=self.config.integrator("monte_carlo"),
                name=name,
            )

    def saddle_basin(self, region: RegionApprox) -> Optional[BasinEstimate]:
        saddles = region.saddles
        if not saddles:
            return None
        return self.basin(region.restricted([c.orbit for c in saddles]), name="saddle-region")

    def trapped(self, catalog: OrbitCatalog) -> Optional[TrappedSetTable]:
        """Trapped-set measure of a thin tube around the first dissipative saddle."""
        if not catalog.dissipative_saddles:
            return None
        basin, budgets = self.config.basin, self.config.budgets
        orbit = catalog.dissipative_saddles[0]
        with self._stage("trapped"):
            samples = densified_samples(
                self.spec, orbit, basin.tube_radius / 2.0, self.config.integrator()
            )
            return trapped_set_measure(
                self.spec,
                Neighborhood.tube(samples, basin.tube_radius),
                basin.trapped_N,
                n_samples=basin.trapped_samples,
                seed=self.config.seed,
                batch_size=budgets.batch_size,
                threads=budgets.threads,
                integrator=self.config.integrator("monte_carlo"),
            )

    def markov(self) -> Optional[MarkovTailTable]:
        if not self.spec.domain.is_compact:
            return None
        basin, budgets = self.config.basin, self.config.budgets
        with self._stage("markov"):
            return markov_tail_probe(
                self.spec,
                rho=basin.markov_rho,
                s=basin.markov_s,
                n_range=basin.markov_n,
                n_samples=basin.markov_samples,
                seed=self.config.seed,
                batch_size=budgets.batch_size,
                threads=budgets.threads,
                integrator=self.config.integrator("monte_carlo"),
            )

    def surgery(self, catalog: OrbitCatalog, bound: Optional[CocycleBound]) -> List[Dict[str, Any]]:
        """Surgery reports for every dissipative saddle of the catalog."""
        certs, surgery = self.config.certificates, self.config.surgery
        reports = []
        with self._stage("surgery"):
            for orbit in catalog.dissipative_saddles:
                try:
                    data = SaddleData.from_orbit(orbit)
                    C = bound.value if bound is not None else surgery.C
                    eps = surgery.eps if surgery.eps is not None else (0.1 * C if C else None)
                    report = full_report(data, C, eps, certs.lambda_rate, certs.alpha)
                    report["orbit"] = orbit.name
                    reports.append(report)
                except DissiflowError as e:
                    self._record("surgery", orbit.name, e)
        return reports

    # Orchestration

    @staticmethod
    def summarize(
        catalog: OrbitCatalog,
        region: RegionApprox,
        verdicts: List[AttractorVerdict],
        basin: Optional[BasinEstimate],
        period_bound: float,
    ) -> Dict[str, Any]:
        """Which side of the sinks-versus-attractors dichotomy the evidence supports."""
        evidence = [v.candidate for v in verdicts if v.attractor_evidence]
        summary: Dict[str, Any] = {
            "sinks": len(catalog.sinks),
            "dissipative_orbits": len(catalog.dissipative),
            "dissipative_saddles": len(catalog.dissipative_saddles),
            "attractor_evidence": evidence,
            "basin_ci": [basin.ci_low, basin.ci_high] if basin is not None else None,
            "region_empty": region.empty,
        }
        if region.empty:
            summary["side"] = "empty-region"
            summary["statement"] = (
                f"No dissipative periodic orbits with period <= {period_bound}; "
                "the dissipative region is empty at this budget."
            )
        elif basin is not None and basin.ci_low >= 0.99 and evidence and len(evidence) == len(catalog.sinks):
            summary["side"] = "finitely-many-attractors"
            summary["statement"] = (
                f"{len(evidence)} sink(s) with attractor evidence attract the dissipative region "
                f"from a set of measure in [{basin.ci_low:.4f}, {basin.ci_high:.4f}]."
            )
        else:
            summary["side"] = "inconclusive"
            summary["statement"] = (
                f"{len(catalog.sinks)} sink(s) and {len(catalog.dissipative_saddles)} dissipative "
                f"saddle(s) with period <= {period_bound}; the evidence does not settle the dichotomy."
            )
        return summary

    def run_orbits(self) -> Tuple[OrbitCatalog, Dict[str, str]]:
        """Census only; writes catalog JSON and CSV."""
        catalog = self.census()
        writer = self._writer()
        paths = writer.write_catalog(catalog)
        writer.write_timings(self.timings)
        return catalog, paths

    def run_basin(self) -> Tuple[BasinEstimate, Optional[TrappedSetTable], Dict[str, str]]:
        """Census, region and weak-basin estimate with plot data."""
        catalog = self.census()
        region = self.region(catalog)
        estimate = self.basin(region)
        trapped = self.trapped(catalog)
        writer = self._writer()
        paths = writer.write_basin(estimate, trapped)
        writer.write_timings(self.timings)
        return estimate, trapped, paths

    def analyze(self) -> ReportBundle:
        """Every stage, then the bundle; timings go to a separate file."""
        self.validate_field()
        catalog = self.census()
        region = self.region(catalog)
        bound = self.cocycle_bound()
        certificates = self.certificates(catalog)
        verdicts = self.attractor_checks(catalog)
        estimate = self.basin(region)
        saddle_estimate = self.saddle_basin(region)
        trapped = self.trapped(catalog)
        markov = self.markov()
        surgery = self.surgery(catalog, bound)

        writer = self._writer()
        writer.write_catalog(catalog)
        writer.write_basin(estimate, trapped)
        if surgery:
            writer.write_surgery(surgery)

        bundle = ReportBundle(
            config_hash=self.config.config_hash(),
            seed=self.config.seed,
            flow=self.spec.describe(),
            catalog=catalog.to_dict(),
            region=region.to_dict(),
            cocycle_bound=bound.model_dump(),
            certificates=[c.to_dict() for c in certificates],
            attractors=[v.to_dict() for v in verdicts],
            basin=estimate.to_dict(),
            saddle_basin=saddle_estimate.to_dict() if saddle_estimate is not None else None,
            trapped=trapped.model_dump() if trapped is not None else None,
            markov=markov.model_dump() if markov is not None else None,
            surgery=surgery,
            errors=self.errors,
            summary=self.summarize(
                catalog, region, verdicts, estimate, self.config.budgets.period_bound
            ),
            versions={"dissiflow": __version__, "numpy": np.__version__, "scipy": scipy.__version__},
        )
        writer.write_bundle(bundle)
        writer.write_timings(self.timings)
        logger.info("Analysis completed successfully!")
        return bundle

    def _writer(self) -> ReportWriter:
        output = self.config.output
        return ReportWriter(output.directory, output.write_csv, output.write_plot_data)
