"""Line-oriented key=value pipeline configuration with sections.

Defaults reproduce the benchmark parameter set: p=3, R=2h, V_f=0.4, E0=1,
nu=0.3, eta=2h, eps0=1e-3, ell=2h, gamma=0.1, n_steps=10, alpha_min^2=0.1,
beta=0.5, tau=0.01, J_tol=0.2h (divided by 5 for sequential runs).
"""

from dataclasses import dataclass, field, asdict

from .mesh import ConfigError


@dataclass
class PipelineConfig:
    benchmark: str = "cantilever"           # cantilever | mbb | custom
    resolution: tuple = (40, 20, 20)
    E0: float = 1.0
    nu: float = 0.3
    V_f: float = 0.4

    # simp (lengths given in units of h resolve at build time)
    p: float = 3.0
    E_min_rel: float = 1e-9
    filter_radius_h: float = 2.0
    move: float = 0.2
    eta_oc: float = 0.5
    drho_tol: float = 0.02
    simp_max_iters: int = 500

    # transfer
    iso_threshold: float = 0.5

    # levelset
    initialization: str = "simp-sdf"        # simp-sdf | porous
    handler: str = ""                       # hp | al; empty = pairing default
    eta_h: float = 2.0
    eps0: float = 1e-3
    ell_h: float = 2.0
    gamma: float = 0.1
    n_steps: int = 10
    J_tol_h: float = 0.2                    # J_tol = J_tol_h * h (/5 sequential)
    C_tol: float = 0.01
    window: int = 5
    ls_max_iters: int = 500
    alpha_min_sq: float = 0.1
    beta: float = 0.5
    tau: float = 0.01
    al_lam0: float = 0.0
    al_Lam0: float = 10.0
    al_xi: float = 1.1
    al_Lam_max: float = 100.0
    al_period: int = 5

    # evaluation and output
    eval_samples: int = 4
    out_dir: str = "out"
    snapshot_period: int = 0                # 0 disables phi/density snapshots
    workers: int = 1
    seed: int = 0                           # reserved; no randomness consumed

    def resolved_handler(self):
        """Pairing default: sequential -> Hilbertian projection, porous ->
        augmented Lagrangian; explicit setting overrides."""
        if self.handler:
            return self.handler
        return "al" if self.initialization == "porous" else "hp"


_SECTIONS = {
    "problem": ["benchmark", "resolution", "E0", "nu", "V_f"],
    "simp": ["p", "E_min_rel", "filter_radius_h", "move", "eta_oc",
             "drho_tol", "simp_max_iters"],
    "transfer": ["iso_threshold"],
    "levelset": ["initialization", "handler", "eta_h", "eps0", "ell_h",
                 "gamma", "n_steps", "J_tol_h", "C_tol", "window",
                 "ls_max_iters", "alpha_min_sq", "beta", "tau",
                 "al_lam0", "al_Lam0", "al_xi", "al_Lam_max", "al_period"],
    "output": ["eval_samples", "out_dir", "snapshot_period", "workers", "seed"],
}


def serialize(config):
    lines = []
    values = asdict(config)
    for section, keys in _SECTIONS.items():
        lines.append(f"[{section}]")
        for key in keys:
            v = values[key]
            if isinstance(v, tuple):
                v = " ".join(str(x) for x in v)
            lines.append(f"{key} = {v}")
        lines.append("")
    return "\n".join(lines)


def parse(text):
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line or (line.startswith("[") and line.endswith("]")):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in PipelineConfig.__dataclass_fields__:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = _coerce(key, val)
    return PipelineConfig(**values)


def _coerce(key, val):
    kind = PipelineConfig.__dataclass_fields__[key].type
    if key == "resolution":
        parts = val.split()
        if len(parts) != 3:
            raise ConfigError("resolution needs three integers")
        return tuple(int(p) for p in parts)
    if kind in (int, "int"):
        return int(val)
    if kind in (float, "float"):
        return float(val)
    return val


def asdict_compat(config):
    """Dict of config fields (tuple-valued fields preserved)."""
    return asdict(config)


def load(path):
    with open(path) as f:
        return parse(f.read())


def save(config, path):
    with open(path, "w") as f:
        f.write(serialize(config))
