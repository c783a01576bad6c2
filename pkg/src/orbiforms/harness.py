"""Running scenarios and assembling the report.

The report has a canonical section, which is a pure function of the
scenario files and the package version, and a separate timings section.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

from . import __version__
from .scenario import Scenario, ScenarioError, load
from .suites import SUITES, Context

RESERVED = ("suite", "expect", "label")


def zoo_paths() -> list[Path]:
    """Bundled scenarios, sorted by file name."""
    root = resources.files("orbiforms") / "zoo"
    return sorted((Path(str(p)) for p in root.iterdir() if p.name.endswith(".json")), key=lambda p: p.name)


def broken_paths() -> list[Path]:
    root = resources.files("orbiforms") / "zoo" / "broken"
    return sorted((Path(str(p)) for p in root.iterdir() if p.name.endswith(".json")), key=lambda p: p.name)


def suite_args(inv: dict) -> dict:
    return {k: v for k, v in inv.items() if k not in RESERVED}


def run_suite(sc: Scenario, index: int, test_degree: int = 3) -> tuple[dict, float]:
    inv = sc.suites[index]
    name = inv["suite"]
    expect = inv.get("expect", "holds")
    args = suite_args(inv)
    entry = {"index": index, "suite": name, "label": inv.get("label", ""), "arguments": args, "expect": expect}
    start = time.perf_counter()
    try:
        checks = SUITES[name].run(Context(sc, args, test_degree))
    except Exception as exc:  # a crashing suite is reported, not raised
        entry.update(verdict="error", status="error", error=f"{type(exc).__name__}: {exc}", checks=[], witnesses=[])
        return entry, time.perf_counter() - start
    elapsed = time.perf_counter() - start
    verdict = "holds" if checks and all(c.holds for c in checks) else "violated"
    entry["verdict"] = verdict
    entry["status"] = "pass" if verdict == expect else "fail"
    entry["checks"] = [{"name": c.name, "holds": c.holds, "detail": c.detail} for c in checks]
    entry["witnesses"] = [{"check": c.name, "detail": c.detail, **c.witness} for c in checks if not c.holds]
    return entry, elapsed


_CACHE: dict[str, Scenario] = {}


def _cached(path: str) -> Scenario:
    if path not in _CACHE:
        _CACHE[path] = load(path)
    return _CACHE[path]


def _task(path: str, index: int, test_degree: int) -> tuple[dict, float]:
    return run_suite(_cached(path), index, test_degree)


def _invalid(path: Path, error: str | None, validation: list | None = None) -> dict:
    out = {"scenario": path.stem, "file": path.name, "status": "invalid", "suites": []}
    if error is not None:
        out["error"] = error
    out["validation"] = validation or []
    return out


def run(paths, parallel: int = 1, test_degree: int = 3, only: set[str] | None = None) -> dict:
    """Run every suite of every scenario; ``only`` restricts to suite names."""
    paths = [Path(p) for p in paths]
    results: list[dict] = []
    timings: dict = {}
    jobs: list[tuple[int, str, int]] = []
    t_total = time.perf_counter()
    for path in paths:
        start = time.perf_counter()
        try:
            sc = _cached(str(path))
        except ScenarioError as exc:
            results.append(_invalid(path, str(exc)))
            continue
        timings[path.name] = {"load": time.perf_counter() - start, "suites": {}}
        if sc.validation:
            results.append(_invalid(path, None, sc.validation) | {"scenario": sc.name})
            continue
        results.append({"scenario": sc.name, "file": path.name, "description": sc.description, "validation": [], "suites": []})
        for k, inv in enumerate(sc.suites):
            if only is None or inv["suite"] in only:
                jobs.append((len(results) - 1, str(path), k))
    if parallel > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            futures = [pool.submit(_task, p, k, test_degree) for _, p, k in jobs]
            outcomes = [f.result() for f in futures]
    else:
        outcomes = [_task(p, k, test_degree) for _, p, k in jobs]
    for (slot, p, k), (entry, elapsed) in zip(jobs, outcomes):
        results[slot]["suites"].append(entry)
        timings[Path(p).name]["suites"][f"{k}:{entry['suite']}"] = elapsed
    for r in results:
        if r.get("status") != "invalid":
            r["status"] = "pass" if all(e["status"] == "pass" for e in r["suites"]) else "fail"
    entries = [e for r in results for e in r["suites"]]
    summary = {
        "scenarios": len(results),
        "invalid": sum(r["status"] == "invalid" for r in results),
        "suites": len(entries),
        "passed": sum(e["status"] == "pass" for e in entries),
        "failed": sum(e["status"] == "fail" for e in entries),
        "errors": sum(e["status"] == "error" for e in entries),
    }
    summary["status"] = "invalid" if summary["invalid"] else ("pass" if summary["passed"] == summary["suites"] else "fail")
    timings["total"] = time.perf_counter() - t_total
    return {
        "canonical": {"version": __version__, "test_degree": test_degree, "scenarios": results, "summary": summary},
        "timings": timings,
    }


def exit_code(report: dict) -> int:
    status = report["canonical"]["summary"]["status"]
    return {"pass": 0, "fail": 1}.get(status, 2)


def canonical_json(report: dict) -> str:
    """Deterministic serialization of the canonical section."""
    return json.dumps(report["canonical"], sort_keys=True, ensure_ascii=False, indent=1, default=str)


def machine(report: dict) -> str:
    return json.dumps(report, sort_keys=True, ensure_ascii=False, indent=1, default=str)


def text(report: dict) -> str:
    lines = []
    rep = report["canonical"]
    for r in rep["scenarios"]:
        lines.append(f"scenario {r['scenario']} ({r['file']}): {r['status']}")
        if "error" in r:
            lines.append(f"  error: {r['error']}")
        for v in r.get("validation", []):
            lines.append(f"  invalid {v['type']} {v['object']}: {v['issue']} (charts {v['charts']})")
        for e in r["suites"]:
            label = f" [{e['label']}]" if e["label"] else ""
            lines.append(f"  {e['status'].upper():5} {e['suite']}{label}: {e['verdict']}, expected {e['expect']}")
            if e["status"] == "error":
                lines.append(f"        {e['error']}")
            for c in e["checks"]:
                if not c["holds"] or e["status"] != "pass":
                    mark = "ok " if c["holds"] else "NO "
                    lines.append(f"        {mark}{c['name']}" + (f": {c['detail']}" if c["detail"] else ""))
    s = rep["summary"]
    lines.append(
        f"{s['suites']} suites in {s['scenarios']} scenarios: {s['passed']} passed, {s['failed']} failed, "
        f"{s['errors']} errors, {s['invalid']} invalid scenarios; status {s['status']}"
    )
    return "\n".join(lines)


__all__ = ["broken_paths", "canonical_json", "exit_code", "machine", "run", "run_suite", "text", "zoo_paths"]
