"""
Riesz-CG Generator Presets
Named generator settings stored as JSON under presets/
"""
import json
import logging
from dataclasses import asdict, dataclass, fields
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

from errors import BadParameters
from problem_io import atomic_write_text
from problems import GENERATOR_MODES, Problem, generate_problem

logger = logging.getLogger(__name__)


@dataclass
class GeneratorPreset:
    """Complete generator configuration"""
    # Metadata
    name: str
    description: str
    version: int = 1
    created_at: str = ""
    modified_at: str = ""

    # Generator Settings
    mode: str = "random"
    n: int = 5
    samples: int = 16
    kappa: float = 25.0
    perturbation: float = 0.2
    seed: int = 0

    def __post_init__(self):
        now = datetime.now().isoformat()
        if not self.created_at:
            self.created_at = now
        if not self.modified_at:
            self.modified_at = now
        if self.mode not in GENERATOR_MODES:
            raise BadParameters(f"preset {self.name!r}: unknown mode {self.mode!r}")

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization"""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GeneratorPreset":
        """Create from dictionary, ignoring unknown keys"""
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})

    def update_modified(self):
        """Update modification timestamp"""
        self.modified_at = datetime.now().isoformat()

    def generator_args(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "samples": self.samples,
            "kappa": self.kappa,
            "perturbation": self.perturbation,
            "seed": self.seed,
            "mode": self.mode,
        }

    def build(self) -> Problem:
        return generate_problem(self.n, self.samples, self.kappa, self.perturbation, self.seed, self.mode)


# Default presets
DEFAULT_PRESETS = {
    "desk": GeneratorPreset(
        name="Desk scale",
        description="Moderately conditioned system with a mild sample-dependent perturbation.",
        created_at="2026-01-31T00:00:00",
        modified_at="2026-01-31T00:00:00",
        n=5, samples=16, kappa=25.0, perturbation=0.2, seed=7,
    ),
    "constant": GeneratorPreset(
        name="Constant coefficients",
        description="Same SPD matrix at every sample; only b varies.",
        created_at="2026-01-31T00:00:00",
        modified_at="2026-01-31T00:00:00",
        n=4, samples=8, kappa=9.0, perturbation=0.0, seed=3,
    ),
    "ill_conditioned": GeneratorPreset(
        name="Ill conditioned",
        description="Largest supported size with kappa = 100.",
        created_at="2026-01-31T00:00:00",
        modified_at="2026-01-31T00:00:00",
        n=8, samples=64, kappa=100.0, perturbation=0.3, seed=11,
    ),
    "mirrored": GeneratorPreset(
        name="Mirrored samples",
        description="Two samples sharing one matrix; one is solved after a single step, so CG is infeasible.",
        created_at="2026-01-31T00:00:00",
        modified_at="2026-01-31T00:00:00",
        mode="mirrored", n=3, samples=2, kappa=10.0, perturbation=0.0, seed=1,
    ),
}


class PresetManager:
    """Manage generator presets - load, save, modify"""

    def __init__(self, presets_dir: Optional[Path] = None):
        self.presets_dir = presets_dir or Path(__file__).parent / "presets"
        self.presets_dir.mkdir(exist_ok=True)
        self._presets: Dict[str, GeneratorPreset] = {}

        # Initialize with defaults then load custom
        self._load_defaults()
        self._load_custom_presets()

    def _load_defaults(self):
        for key, preset in DEFAULT_PRESETS.items():
            self._presets[key] = preset

    def _load_custom_presets(self):
        """Load custom presets from JSON files"""
        for json_file in sorted(self.presets_dir.glob("*.json")):
            try:
                with open(json_file, 'r', encoding='utf-8') as f:
                    data = json.load(f)
                self._presets[json_file.stem] = GeneratorPreset.from_dict(data)
            except (OSError, ValueError, TypeError, BadParameters) as e:
                logger.warning("Error loading preset %s: %s", json_file, e)

    def get(self, name: str) -> Optional[GeneratorPreset]:
        """Get preset by name"""
        return self._presets.get(name)

    def list_presets(self) -> List[str]:
        """List all preset names"""
        return list(self._presets.keys())

    def save_preset(self, key: str, preset: GeneratorPreset) -> Path:
        """Save preset to JSON file"""
        preset.update_modified()
        file_path = self.presets_dir / f"{key}.json"
        atomic_write_text(file_path, json.dumps(preset.to_dict(), ensure_ascii=False, indent=2) + "\n")
        self._presets[key] = preset
        return file_path


# Singleton instance
_preset_manager: Optional[PresetManager] = None


def get_preset_manager() -> PresetManager:
    """Get global preset manager instance"""
    global _preset_manager
    if _preset_manager is None:
        _preset_manager = PresetManager()
    return _preset_manager
