"""
Experiment Recipes

Loads named experiment parameter sets from YAML files under recipes/.
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import yaml

from .errors import InputError

logger = logging.getLogger(__name__)

RECIPE_KINDS = ("compare", "bernstein", "certify")


@dataclass
class CompareParameters:
    """Gap experiment: Gaussian designs for a sweep of m."""
    n: int = 256
    k: int = 4
    sigma: float = 1.0
    m_values: Tuple[int, ...] = (40, 60, 80)
    trials: int = 500
    signals: int = 3
    signal_norm: Optional[float] = None
    seed: int = 0


@dataclass
class BernsteinParameters:
    """Tail check for sums of centered rank-one draws."""
    n: int = 16
    k: int = 4
    size: int = 64
    reps: int = 2000
    grid_points: int = 5
    seed: int = 0


@dataclass
class CertifyParameters:
    """Certificate on a Gaussian design."""
    m: int = 32
    n: int = 64
    k: int = 4
    sigma: float = 1.0
    trials: int = 10_000
    level_fraction: float = 0.9
    seed: int = 0


_PARAMETER_TYPES = {
    "compare": CompareParameters,
    "bernstein": BernsteinParameters,
    "certify": CertifyParameters,
}


@dataclass
class Recipe:
    """A named, versioned experiment configuration."""
    name: str
    display_name: str
    description: str
    kind: str
    parameters: Any
    raw_config: Dict[str, Any] = field(default_factory=dict)


class RecipeManager:
    """Manages loading and accessing experiment recipes."""

    def __init__(self, recipes_dir: Optional[str] = None):
        """
        Args:
            recipes_dir: Directory holding *.yaml recipes.
                         Defaults to project root/recipes/
        """
        if recipes_dir is None:
            project_root = Path(__file__).parent.parent.parent
            recipes_dir = project_root / "recipes"

        self.recipes_dir = Path(recipes_dir)
        self._recipes: Dict[str, Recipe] = {}
        self._load_recipes()

    def _load_recipes(self):
        for yaml_file in sorted(self.recipes_dir.glob("*.yaml")):
            self._load_recipe_file(yaml_file)

    def _load_recipe_file(self, yaml_file: Path):
        try:
            with open(yaml_file, "r", encoding="utf-8") as f:
                config = yaml.safe_load(f)

            if not config or "name" not in config:
                return

            recipe = self._parse_recipe_config(config)
            self._recipes[recipe.name] = recipe

        except (OSError, yaml.YAMLError, InputError) as e:
            logger.warning("Failed to load recipe %s: %s", yaml_file, e)

    def _parse_recipe_config(self, config: Dict[str, Any]) -> Recipe:
        kind = config.get("kind")
        if kind not in _PARAMETER_TYPES:
            raise InputError(f"recipe {config['name']!r}: kind must be one of {', '.join(RECIPE_KINDS)}")
        params_cfg = dict(config.get("parameters") or {})
        if "m_values" in params_cfg:
            params_cfg["m_values"] = tuple(int(m) for m in params_cfg["m_values"])
        try:
            parameters = _PARAMETER_TYPES[kind](**params_cfg)
        except TypeError as e:
            raise InputError(f"recipe {config['name']!r}: {e}") from e

        return Recipe(
            name=config["name"],
            display_name=config.get("display_name", config["name"]),
            description=config.get("description", ""),
            kind=kind,
            parameters=parameters,
            raw_config=config,
        )

    def get_recipe(self, name: str) -> Optional[Recipe]:
        return self._recipes.get(name)

    def require(self, name: str, kind: str) -> Recipe:
        """The recipe ``name``, which must be of ``kind``."""
        recipe = self.get_recipe(name)
        if recipe is None:
            known = ", ".join(sorted(self._recipes)) or "none"
            raise InputError(f"unknown recipe {name!r} (available: {known})")
        if recipe.kind != kind:
            raise InputError(f"recipe {name!r} is a {recipe.kind} recipe, not {kind}")
        return recipe

    def get_all_recipes(self) -> Dict[str, Recipe]:
        return self._recipes.copy()

    def by_kind(self, kind: str) -> List[Recipe]:
        return sorted((r for r in self._recipes.values() if r.kind == kind), key=lambda r: r.name)


@lru_cache(maxsize=1)
def get_recipe_manager() -> RecipeManager:
    """Get the singleton recipe manager instance."""
    from ..config import get_settings

    return RecipeManager(get_settings().recipes_dir)
