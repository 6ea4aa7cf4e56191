"""Environment split along connected components of the truth graph.

Two truths are connected when some action can rule out both (they share an
action). Connected components, found by depth-first traversal, are sorted
by size descending (ties by lexicographically smallest member) and
assigned alternately to the two halves, keeping related truths together.
An action goes to the first half only if all its related truths are there;
otherwise it goes to the second. Each half's rule-out sets are restricted
to its own truths.
"""

from __future__ import annotations

from ..envmodel import ActionOutcomeSpec, OutcomeState, SeedConfig, validate_seed_config
from ..errors import InvalidConfig, SingleComponent


def truth_connection_graph(cfg: SeedConfig) -> dict[str, set[str]]:
    """Adjacency: truths linked whenever they relate to the same action."""
    adj: dict[str, set[str]] = {t: set() for t in cfg.truths}
    for spec in cfg.actions:
        related = sorted(spec.related_truths())
        for i in range(len(related)):
            for j in range(i + 1, len(related)):
                adj[related[i]].add(related[j])
                adj[related[j]].add(related[i])
    return adj


def connected_components(cfg: SeedConfig) -> list[list[str]]:
    """DFS components over the truth connection graph, deterministic order."""
    adj = truth_connection_graph(cfg)
    index = {t: i for i, t in enumerate(cfg.truths)}
    seen: set[str] = set()
    components: list[list[str]] = []
    for start in cfg.truths:
        if start in seen:
            continue
        stack = [start]
        comp: list[str] = []
        seen.add(start)
        while stack:
            node = stack.pop()
            comp.append(node)
            for nb in sorted(adj[node], key=index.get, reverse=True):
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        components.append(sorted(comp, key=index.get))
    components.sort(key=lambda c: (-len(c), min(c)))
    return components


def _restrict(cfg: SeedConfig, truths: list[str], actions: list[str], half: int) -> SeedConfig:
    keep_t = set(truths)
    keep_a = set(actions)
    specs = []
    for spec in cfg.actions:
        if spec.name not in keep_a:
            continue
        states = tuple(
            OutcomeState(
                label=s.label,
                ruled_out=tuple(t for t in s.ruled_out if t in keep_t),
                interval=s.interval,
            )
            for s in spec.states
        )
        specs.append(ActionOutcomeSpec(name=spec.name, kind=spec.kind, states=states))
    return SeedConfig(
        domain_name=f"{cfg.domain_name}-split{half}",
        goal=cfg.goal,
        truths=tuple(t for t in cfg.truths if t in keep_t),
        actions=tuple(specs),
        provenance={"split_of": cfg.domain_name, "half": half},
    )


def split_environment(cfg: SeedConfig) -> tuple[SeedConfig, SeedConfig]:
    """Partition a domain into two disjoint sub-domains."""
    components = connected_components(cfg)
    if len(components) < 2:
        raise SingleComponent(
            f"{cfg.domain_name!r} has {len(components)} connected component(s); need >= 2"
        )
    t1: list[str] = []
    t2: list[str] = []
    for i, comp in enumerate(components):
        (t1 if i % 2 == 0 else t2).extend(comp)
    t1_set = set(t1)

    a1: list[str] = []
    a2: list[str] = []
    for spec in cfg.actions:
        if spec.related_truths() <= t1_set:  # vacuously true for inert actions
            a1.append(spec.name)
        else:
            a2.append(spec.name)

    halves = (_restrict(cfg, t1, a1, 1), _restrict(cfg, t2, a2, 2))
    for half in halves:
        report = validate_seed_config(half)
        if not report.ok:
            raise InvalidConfig(
                f"split half {half.domain_name!r} fails validation: {report.summary()}",
                report=report,
            )
    return halves
