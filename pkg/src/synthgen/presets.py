from src.models.index import Scenario

DESK_SERVICES = (
    "audit",
    "authentication",
    "bpmn",
    "chat",
    "feature",
    "in-mail",
    "notification",
    "oidc",
    "payment",
    "reporting",
    "scheduler",
    "search",
    "survey",
    "task",
    "user-tenant",
    "video",
)


def decoupled_scenario(seed: int = 7) -> Scenario:
    """Three services, three exclusive developers each: no common developers, no coupling."""
    services = ("audit", "chat", "search")
    teams = {f"{service}.dev{i}": (service,) for service in services for i in range(1, 4)}
    return Scenario(seed=seed, services=services, teams=teams, commits_per_developer=4, changes_per_commit=2)


def floater_scenario(seed: int = 11) -> Scenario:
    """Two single-service teams plus one developer alternating between them for ten commits of 10 LOC."""
    return Scenario(
        seed=seed,
        services=("audit", "chat"),
        teams={"audit.dev1": ("audit",), "audit.dev2": ("audit",), "chat.dev1": ("chat",), "chat.dev2": ("chat",)},
        commits_per_developer=3,
        floaters={"floater": ("audit", "chat") * 5},
        floater_loc=10,
    )


def planted_scenario(seed: int = 3) -> Scenario:
    """
    Per service: a jack committing once to each of six common files, a maven owning three
    private files, and six helpers touching one common file each.
    """
    services = ("audit", "chat")
    teams = {}
    for service in services:
        teams[f"jack.{service}"] = (service,)
        teams[f"maven.{service}"] = (service,)
        for i in range(1, 7):
            teams[f"helper{i}.{service}"] = (service,)
    return Scenario(
        seed=seed,
        services=services,
        teams=teams,
        commits_per_developer=1,
        changes_per_commit=1,
        common_files=6,
        private_files=3,
        jacks={service: f"jack.{service}" for service in services},
        mavens={service: f"maven.{service}" for service in services},
        issue_link_probability=0.5,
    )


def desk_scale_scenario(seed: int = 2024) -> Scenario:
    """Sixteen services and 61 developers: about 1350 commits, 2194 issues and 25000 change records."""
    services = DESK_SERVICES
    teams = {}
    jacks, mavens = {}, {}
    for i, service in enumerate(services):
        jacks[service] = f"dev{2 * i:02d}"
        mavens[service] = f"dev{2 * i + 1:02d}"
        teams[jacks[service]] = (service,)
        teams[mavens[service]] = (service,)
    for j in range(32, 58):
        teams[f"dev{j:02d}"] = (services[j % 16], services[(j + 5) % 16])
    floaters = {f"dev{j:02d}": (services[j % 16], services[(j + 3) % 16]) * 5 for j in range(58, 61)}
    return Scenario(
        seed=seed,
        services=services,
        teams=teams,
        commits_per_developer=11,
        changes_per_commit=42,
        common_files=42,
        private_files=5,
        jacks=jacks,
        mavens=mavens,
        floaters=floaters,
        issue_link_probability=1.0,
        unlinked_issues=840,
    )


PRESETS = {
    "decoupled": decoupled_scenario,
    "floater": floater_scenario,
    "planted": planted_scenario,
    "desk": desk_scale_scenario,
}
