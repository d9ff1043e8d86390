"""
Utility functions for formatting analysis results into readable tables.

All formatters take the JSON-ready dictionaries written to the report
bundle, so a stored bundle renders exactly like a fresh run.
"""

from typing import Any, Dict, List, Optional

from tabulate import tabulate


def _fmt(value: Any, spec: str = ".6g") -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, dict) and set(value) == {"re", "im"}:
        re, im = value["re"], value["im"]
        return f"{re:{spec}}{im:+{spec}}i"
    if isinstance(value, (int, float)):
        return f"{value:{spec}}"
    return str(value)


class SummaryFormatter:
    """Formats catalogs, certificates, basin estimates and surgery reports into tables."""

    @staticmethod
    def format_catalog(catalog: Dict[str, Any]) -> str:
        """Periodic orbit table with coverage statistics."""
        orbits = catalog.get("orbits", [])
        result = "🔁 PERIODIC ORBITS\n" + "=" * 50 + "\n\n"
        if not orbits:
            result += "No periodic orbits found within the search budget.\n"
        else:
            rows = [
                [
                    o["name"],
                    _fmt(o["period"], ".8g"),
                    o["class"],
                    _fmt(o["lambda"]),
                    _fmt(o["mu"]),
                    _fmt(o["det"]),
                    _fmt(o["dissipative"]),
                    _fmt(o["residual"], ".2e"),
                ]
                for o in orbits
            ]
            result += tabulate(
                rows,
                headers=["Orbit", "Period", "Class", "λ", "μ", "det", "Dissipative", "Residual"],
                tablefmt="grid",
            )
            result += "\n"

        coverage = catalog.get("coverage", {})
        if coverage:
            cov_rows = [
                ["Seeds", coverage.get("seeds", 0)],
                ["Newton runs", coverage.get("newton_runs", 0)],
                ["Converged", coverage.get("converged", 0)],
                ["Duplicates merged", coverage.get("duplicates", 0)],
            ]
            for reason, count in sorted(coverage.get("failures", {}).items()):
                cov_rows.append([f"Failed: {reason}", count])
            result += "\n🔍 Coverage:\n"
            result += tabulate(cov_rows, headers=["Statistic", "Count"], tablefmt="grid") + "\n"
        return result

    @staticmethod
    def format_certificates(certificates: List[Dict[str, Any]]) -> str:
        """One row per certificate: kind, subject, verdict and worst margin."""
        result = "📐 SPLITTING CERTIFICATES\n" + "=" * 50 + "\n\n"
        if not certificates:
            return result + "No certificates were computed.\n"
        rows = []
        for cert in certificates:
            samples = cert.get("samples", [])
            margins = [s["margin"] for s in samples if isinstance(s.get("margin"), (int, float))]
            rows.append(
                [
                    cert["kind"],
                    cert["subject"],
                    "PASS" if cert["verdict"] else "FAIL",
                    len(samples),
                    _fmt(min(margins)) if margins else _fmt(samples[0]["margin"]) if samples else "-",
                ]
            )
        result += tabulate(
            rows, headers=["Kind", "Subject", "Verdict", "Samples", "Worst margin"], tablefmt="grid"
        )
        return result + "\n"

    @staticmethod
    def format_basin(
        basin: Optional[Dict[str, Any]],
        trapped: Optional[Dict[str, Any]] = None,
        markov: Optional[Dict[str, Any]] = None,
    ) -> str:
        """Weak-basin estimate, trapped-set and Markov tail tables."""
        result = "🎯 BASIN ESTIMATES\n" + "=" * 50 + "\n\n"
        if basin is not None:
            rows = [
                ["Region", basin["region"]],
                ["Samples", basin["n"]],
                ["Estimate", _fmt(basin["estimate"], ".4f")],
                ["95% CI", f"[{basin['ci_low']:.4f}, {basin['ci_high']:.4f}]"],
                ["Flags", ", ".join(basin.get("flags", [])) or "-"],
            ]
            for fate, count in sorted(basin.get("fate_counts", {}).items()):
                rows.append([f"Fate: {fate}", count])
            result += tabulate(rows, headers=["Metric", "Value"], tablefmt="grid") + "\n"

        if trapped is not None and trapped.get("rows"):
            result += "\n⏳ Trapped-set measure:\n"
            rows = [
                [_fmt(r["N"]), _fmt(r["estimate"], ".4f"), f"[{r['ci_low']:.4f}, {r['ci_high']:.4f}]"]
                for r in trapped["rows"]
            ]
            result += tabulate(rows, headers=["N", "Estimate", "95% CI"], tablefmt="grid") + "\n"

        if markov is not None and markov.get("rows"):
            result += "\n📉 Markov tail probe:\n"
            rows = [
                [r["n"], _fmt(r["fraction"], ".5f"), _fmt(r["bound"], ".5f"), "yes" if r["passed"] else "no"]
                for r in markov["rows"]
            ]
            result += tabulate(
                rows, headers=["n", "m(Ω(n))", "(1+ρ)^-ns", "Within 3 SE"], tablefmt="grid"
            ) + "\n"
        return result

    @staticmethod
    def format_surgery(report: Dict[str, Any]) -> str:
        """Shear sink construction and budget margins."""
        result = "🔧 SURGERY\n" + "=" * 50 + "\n\n"
        saddle = report.get("saddle", {})
        sink = report.get("sink", {})
        rows = [
            ["λ", _fmt(saddle.get("lam"))],
            ["μ", _fmt(saddle.get("mu"))],
            ["γ", _fmt(saddle.get("gamma"))],
            ["τ", _fmt(saddle.get("tau"))],
            ["trace(A·P)", _fmt(sink.get("trace"), ".3e")],
            ["det(A·P)", _fmt(sink.get("det"))],
            ["Eigenvalue modulus", _fmt(sink.get("modulus"))],
            ["Sink", _fmt(sink.get("is_sink"))],
        ]
        result += tabulate(rows, headers=["Quantity", "Value"], tablefmt="grid") + "\n"

        budget = report.get("budget")
        if budget:
            result += "\n💰 Budget:\n"
            rows = [[key, _fmt(budget.get(key))] for key in ("eps0", "eps1", "m", "delta")]
            rows += [[f"margin: {k}", _fmt(v)] for k, v in budget.get("margins", {}).items()]
            result += tabulate(rows, headers=["Quantity", "Value"], tablefmt="grid") + "\n"
        return result

    @staticmethod
    def format_summary(summary: Dict[str, Any]) -> str:
        """Headline counts and the dichotomy statement."""
        rows = [
            ["Sinks", summary.get("sinks", 0)],
            ["Dissipative orbits", summary.get("dissipative_orbits", 0)],
            ["Dissipative saddles", summary.get("dissipative_saddles", 0)],
            ["Attractor evidence", ", ".join(summary.get("attractor_evidence", [])) or "-"],
            ["Basin CI", summary.get("basin_ci") or "-"],
        ]
        result = "🧭 SUMMARY\n" + "=" * 50 + "\n\n"
        result += tabulate(rows, headers=["Item", "Value"], tablefmt="grid") + "\n"
        if summary.get("statement"):
            result += f"\n{summary['statement']}\n"
        return result
