"""``qsa`` command-line driver.

Exit status: 0 analysis completed, 2 parse or usage error, 3 budget
exceeded, 4 internal inconsistency.
"""
from __future__ import annotations

import re
import sys
import time

import click

from .deffile import ParseError, load_definition
from .linalg import EPS_NUM, trace_distance
from .report import Report, identity_fields, subset_text
from .reproductions import run_reproductions
from .schemes import (AdversaryStructure, ProtocolSpec, classical_adversary_structure, parse_builtin,
                      scheme_as_protocol, singletons, square_structure, subsets_of_size, subsets_up_to)
from .simsearch import (DEFAULT_MAX_RANDOMNESS, DEFAULT_NODE_BUDGET, BudgetExceeded, analyze_protocol,
                        check_theorem_properties, row_column_sums, verify_certificate)
from .superposition import (CREATED, SUPPLIED, adversary_state, deutsch_jozsa_query, is_superposition_secure,
                            standard_attack_report, theorem1_verdict)

DEFAULT_SEED = 20240101

EXIT_OK, EXIT_PARSE, EXIT_BUDGET, EXIT_INCONSISTENT = 0, 2, 3, 4


class CliFailure(click.ClickException):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.exit_code = code


def parse_subset(text: str, n: int) -> frozenset:
    body = text.strip()
    if body.startswith("{") and body.endswith("}"):
        body = body[1:-1]
    try:
        parties = frozenset(int(x) for x in body.replace(",", " ").split())
    except ValueError:
        raise click.BadParameter(f"not a party set: {text!r}") from None
    bad = [i for i in parties if not 0 <= i < n]
    if bad:
        raise click.BadParameter(f"party {bad[0]} out of range 0..{n - 1}")
    return parties


def parse_structure(text: str, n: int) -> AdversaryStructure:
    """``singletons``, ``size<=k``, ``size=k`` or explicit ``{0},{1,2}`` (0-based parties)."""
    text = text.strip()
    if text == "singletons":
        return singletons(n)
    m = re.fullmatch(r"size\s*(<=|=)\s*(\d+)", text)
    if m:
        k = int(m.group(2))
        if k > n:
            raise click.BadParameter(f"subset size {k} exceeds n = {n}")
        return subsets_up_to(n, k) if m.group(1) == "<=" else subsets_of_size(n, k)
    sets = re.findall(r"\{[^{}]*\}", text)
    if not sets or re.sub(r"\{[^{}]*\}|[\s,]", "", text):
        raise click.BadParameter(f"cannot read adversary structure {text!r}")
    return AdversaryStructure(tuple(parse_subset(s, n) for s in sets))


def load_target(builtin: str | None, path: str | None):
    if (builtin is None) == (path is None):
        raise click.UsageError("give exactly one of --builtin or --file")
    if builtin is not None:
        try:
            return parse_builtin(builtin)
        except ValueError as exc:
            raise CliFailure(str(exc), EXIT_PARSE) from None
    try:
        return load_definition(path)
    except ParseError as exc:
        raise CliFailure(f"{path}: {exc}", EXIT_PARSE) from None
    except OSError as exc:
        raise CliFailure(str(exc), EXIT_PARSE) from None


def emit(report: Report, fmt: str, code: int = EXIT_OK) -> None:
    click.echo(report.render(fmt), nl=False)
    if code:
        sys.exit(code)


def source_options(f):
    f = click.option("--file", "path", type=click.Path(dir_okay=False), help="Definition file.")(f)
    return click.option("--builtin", help="xor2 | shamir:n,t,p | dealer:n[,m] | additive4 | trivial")(f)


def output_option(f):
    f = click.option("--timings", is_flag=True, help="Add wall-clock timings (breaks byte-for-byte determinism).")(f)
    return click.option("--output", "fmt", type=click.Choice(["text", "kv"]), default="text", show_default=True)(f)


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Superposition-attack analysis of secret sharing and deterministic MPC."""


@main.command("ss-analyze")
@source_options
@click.option("--corrupt", default="singletons", show_default=True, help="Adversary structure F.")
@output_option
def ss_analyze(builtin, path, corrupt, fmt, timings):
    """Decide superposition security of a sharing scheme against F."""
    t0 = time.perf_counter()
    obj = load_target(builtin, path)
    scheme = obj.as_scheme() if isinstance(obj, ProtocolSpec) else obj
    f = parse_structure(corrupt, scheme.n)
    rep = Report("ss-analyze")
    identity_fields(rep, obj)
    rep.add("structure", f)
    rep.add("classical_structure", classical_adversary_structure(scheme))
    rep.add("square_structure", square_structure(f))
    v1 = theorem1_verdict(scheme, f)
    v2 = is_superposition_secure(scheme, f)
    rep.add("theorem1_verdict", "secure" if v1 else "insecure")
    rep.add("direct_verdict", "secure" if v2 else "insecure")
    rep.add("verdict", ("SECURE" if v1 else "INSECURE") if v1 == v2 else "INCONSISTENT")
    if timings:
        rep.add("elapsed_s", time.perf_counter() - t0)
    emit(rep, fmt, EXIT_OK if v1 == v2 else EXIT_INCONSISTENT)


@main.command("ss-attack")
@source_options
@click.option("--a0", default="{0}", show_default=True, help="First corrupted subset.")
@click.option("--a1", default="{1}", show_default=True, help="Second corrupted subset.")
@click.option("--s", "s", type=int, default=0, show_default=True, help="Index of the first secret.")
@click.option("--s2", type=int, default=1, show_default=True, help="Index of the second secret.")
@click.option("--mode", type=click.Choice([CREATED, SUPPLIED]), default=CREATED, show_default=True)
@output_option
def ss_attack(builtin, path, a0, a1, s, s2, mode, fmt, timings):
    """Run the two-subset superposition attack and report the guessing probability.

    Created mode uses the standard query; supplied mode uses the
    phase-encoded query over all response strings.
    """
    t0 = time.perf_counter()
    obj = load_target(builtin, path)
    scheme = obj.as_scheme() if isinstance(obj, ProtocolSpec) else obj
    set0, set1 = parse_subset(a0, scheme.n), parse_subset(a1, scheme.n)
    if set0 == set1:
        raise click.BadParameter("the two subsets must differ")
    n_s = len(scheme.secrets)
    if not (0 <= s < n_s and 0 <= s2 < n_s) or s == s2:
        raise click.BadParameter(f"need two distinct secret indices in 0..{n_s - 1}")
    rep = Report("ss-attack")
    identity_fields(rep, obj)
    rep.add("a0", subset_text(set0))
    rep.add("a1", subset_text(set1))
    rep.add("secret_pair", [str(scheme.secrets[s]), str(scheme.secrets[s2])])
    rep.add("mode", mode)
    if mode == CREATED:
        out = standard_attack_report(scheme, set0, set1, s, s2)
        rep.add("query", "standard")
        rep.add("p_guess", out["p_guess"])
        rep.add("trace_norm_S", out["trace_norm_S"])
        rep.add("trace_norm_delta", out["trace_norm_delta"])
    else:
        q = deutsch_jozsa_query(set0, set1, scheme.view_bits * max(len(set0), len(set1)))
        tn = 2 * trace_distance(adversary_state(scheme, q, s), adversary_state(scheme, q, s2))
        rep.add("query", "deutsch_jozsa")
        rep.add("p_guess", 0.5 + tn / 4)
        rep.add("trace_norm_delta", tn)
    if timings:
        rep.add("elapsed_s", time.perf_counter() - t0)
    emit(rep, fmt)


@main.command("mpc-analyze")
@source_options
@click.option("--corrupt", default="singletons", show_default=True, help="Adversary structure F.")
@click.option("--mode", type=click.Choice([CREATED, SUPPLIED]), default=CREATED, show_default=True,
              help="Simulator synthesis is defined for created mode only.")
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True, help="Random battery seed.")
@click.option("--budget", type=int, default=DEFAULT_NODE_BUDGET, show_default=True, help="Search node budget.")
@click.option("--max-randomness", type=int, default=DEFAULT_MAX_RANDOMNESS, show_default=True)
@click.option("--random-adversaries", type=int, default=20, show_default=True)
@click.option("--tolerance", type=float, default=EPS_NUM, show_default=True)
@output_option
def mpc_analyze(builtin, path, corrupt, mode, seed, budget, max_randomness, random_adversaries, tolerance,
                fmt, timings):
    """Decide whether a perfect simulator exists, and synthesize and test it."""
    if mode != CREATED:
        raise click.BadParameter("only created-response mode is decidable here", param_hint="--mode")
    t0 = time.perf_counter()
    obj = load_target(builtin, path)
    proto = obj if isinstance(obj, ProtocolSpec) else scheme_as_protocol(obj)
    f = parse_structure(corrupt, proto.n)
    rep = Report("mpc-analyze")
    identity_fields(rep, obj)
    rep.add("structure", f)
    rep.add("mode", mode)
    rep.add("seed", seed)
    rep.add("budget", budget)
    rep.add("tolerance", tolerance)
    try:
        res = analyze_protocol(proto, f, n_random=random_adversaries, seed=seed, max_randomness=max_randomness,
                               budget=budget, tol=tolerance)
    except BudgetExceeded as exc:
        rep.add("verdict", "UNDECIDED")
        rep.add("reason", str(exc))
        emit(rep, fmt, EXIT_BUDGET)
        return
    rep.add("search_nodes", res.nodes)
    consistent = res.verified
    if res.secure:
        rep.add("verdict", "SECURE")
        rep.add("permutations", {f"{s},{t},{list(a)}": list(p) for (s, t, a), p in sorted(res.family.perms.items())})
        props = check_theorem_properties(res.protocol, f, res.family)
        rep.add("theorem_properties", props)
        sums_ok = True
        for s, u in enumerate(res.unitaries.unitaries):
            rep.add(f"unitary_{s}", u)
            rows, cols = row_column_sums(u)
            sums_ok &= bool(abs(rows - 1).max() <= 1e-9 and abs(cols - 1).max() <= 1e-9)
        rep.add("row_column_sums_one", sums_ok)
        rep.add("battery_size", res.battery_size)
        rep.add("battery_max_distance", res.battery_distance)
        consistent &= props and sums_ok
    else:
        rep.add("verdict", "INSECURE")
        cert = res.certificate
        if cert is None:
            rep.add("certificate", "none")
            # beyond two joint inputs absence need not show up pairwise
            consistent = len(proto.inputs) > 2
        else:
            rep.add("certificate", {"s": cert.s, "s2": cert.s2, "a": list(cert.a), "a2": list(cert.a2),
                                    "lhs": [[list(k), v] for k, v in cert.lhs],
                                    "rhs": [[list(k), v] for k, v in cert.rhs]})
            consistent &= verify_certificate(res.protocol, f, cert)
    rep.add("status", "OK" if consistent else "INCONSISTENT")
    if timings:
        rep.add("elapsed_s", time.perf_counter() - t0)
    emit(rep, fmt, EXIT_OK if consistent else EXIT_INCONSISTENT)


@main.command("verify-paper")
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True, help="Random battery seed.")
@output_option
def verify_paper(seed, fmt, timings):
    """Rerun every worked example and report pass/fail per item."""
    items = run_reproductions(seed)
    rep = Report("verify-paper")
    rep.add("seed", seed)
    for item in items:
        rep.add(f"{item.name}", "PASS" if item.passed else "FAIL")
        for k, v in item.values.items():
            rep.add(f"{item.name}.{k}", v)
        if timings:
            rep.add(f"{item.name}.elapsed_s", item.seconds)
    passed = sum(i.passed for i in items)
    rep.add("passed", f"{passed}/{len(items)}")
    emit(rep, fmt, EXIT_OK if passed == len(items) else EXIT_INCONSISTENT)


if __name__ == "__main__":
    main()
