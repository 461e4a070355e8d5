#!/usr/bin/env python3

"""Markdown summary of a finished campaign."""

import collections
import json
import os
import statistics

from .errors import ConfigError


def load_campaign(output_dir):
    path = os.path.join(output_dir, "campaign.json")
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except OSError as err:
        raise ConfigError(f"no campaign results in {output_dir}: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path} is not valid JSON: {err}") from err


def _table(header, rows):
    lines = ["| " + " | ".join(header) + " |",
             "|" + "|".join("---" for _ in header) + "|"]
    lines.extend("| " + " | ".join(str(cell) for cell in row) + " |" for row in rows)
    return lines


def _mean(values):
    values = list(values)
    return statistics.fmean(values) if values else 0.0


def render_report(campaign):
    """Render the ``campaign.json`` document as Markdown."""
    summary = campaign["summary"]
    bugs = summary.get("bugs", [])
    lines = ["# hdlmutant campaign report", ""]
    attempted = summary.get("variants_attempted", 0)
    surviving = summary.get("variants_surviving", 0)
    survival = 100.0 * surviving / attempted if attempted else 0.0
    lines.append(f"- Iterations: {summary.get('iterations', 0)}")
    lines.append(f"- Variants surviving: {surviving} of {attempted} ({survival:.1f}%)")
    lines.append(f"- Mutation candidates checked: {summary.get('candidates_checked', 0)}")
    lines.append(f"- Bugs: {len(bugs)}")
    lines.append("")

    lines += ["## Bugs by class and tool", ""]
    counts = collections.Counter((bug["tool"], bug["class"]) for bug in bugs)
    tools = sorted({tool for tool, _ in counts})
    if tools:
        rows = [[tool] + [counts[(tool, cls)] for cls in "HCM"]
                + [sum(counts[(tool, cls)] for cls in "HCM")] for tool in tools]
        lines += _table(["Tool", "H", "C", "M", "Total"], rows)
    else:
        lines.append("No bugs found.")
    lines.append("")

    if bugs:
        lines += ["## Bug list", ""]
        rows = []
        for bug in bugs:
            divergence = bug.get("first_divergence")
            where = f"t={divergence['time']} {divergence['port']}" if divergence else "-"
            rows.append([bug["id"], bug["class"], bug["tool"], bug["culprit"], where,
                         bug.get("reduced") or "-"])
        lines += _table(["Id", "Class", "Tool", "Culprit", "First divergence", "Reduced"], rows)
        lines.append("")

    coverage = summary.get("coverage", [])
    lines += ["## Seed coverage", ""]
    lines += _table(["Metric", "Mean %"],
                    [[name.capitalize(), f"{_mean(c[name] for c in coverage):.2f}"]
                     for name in ("line", "condition", "branch")])
    lines.append("")

    complexity = summary.get("complexity", [])
    lines += ["## Variant complexity", ""]
    lines += _table(["Delta", "Mean", "Max"],
                    [[name.capitalize(), f"{_mean(c[name] for c in complexity):.2f}",
                      max((c[name] for c in complexity), default=0)]
                     for name in ("statements", "variables", "branches")])
    lines.append("")
    return "\n".join(lines)


def write_report(output_dir, report_path):
    text = render_report(load_campaign(output_dir))
    with open(report_path, "w", encoding="utf-8") as f:
        f.write(text)
    return text
