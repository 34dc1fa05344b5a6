"""Bundled experiment configs, one per headline simulation."""
from importlib import resources

REGISTRY = {
    "thm22-gaussian-replacing":
        "iid standard Gaussian, replacing model, constant rate 0.5, n=2000",
    "thm22-gaussian-random-lambda":
        "iid standard Gaussian, replacing model, uniform random rate, n=2000",
    "thm22-gaussian-ar1":
        "AR(1) rho=0.5 Gaussian, replacing model, constant rate 0.5, n=5000",
    "thm23-chi-d2":
        "chi sequence d=2 (Rayleigh margins), replacing model, n=5000",
    "thm23-chi-d3":
        "chi sequence d=3, replacing model, n=5000",
    "thm24-orderstat-d3-r1":
        "max of 3 Gaussian coordinates, replacing model, n=5000",
    "thm24-orderstat-d3-r2":
        "median of 3 Gaussian coordinates, replacing model, n=5000",
    "contrast-missing-vs-replacing":
        "paired missing vs replacing run, gap report at (x,y)=(0,1), n=2000",
}


def preset_text(name: str) -> str:
    if name not in REGISTRY:
        raise KeyError(f"unknown preset {name!r}; run 'maxreplace presets' for the list")
    return resources.files(__package__).joinpath(f"{name}.cfg").read_text(encoding="utf-8")
