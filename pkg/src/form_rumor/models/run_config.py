import json
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from pydantic import BaseModel, validator

from form_rumor.constants import CONFIG_ECHO_FILE, DATASET_TOP_K, DEFAULT_FOLDS
from form_rumor.encoders.pipeline import adapters
from form_rumor.encoders.pretrained import backbone_widths, visual_backbones
from form_rumor.ingestion import datasets
from form_rumor.models.model_dims import ModelDims
from form_rumor.models.padding_policy import PaddingPolicy
from form_rumor.models.train_config import TrainConfig


class RunConfig(BaseModel):
    """Everything one CLI run needs, resolved from flags, a config file and defaults"""

    dataset: str = "custom"
    data_root: Optional[Path] = None
    cache_dir: Optional[Path] = None
    out: Path = Path("form-out")
    adapter: str = "toy"
    visual_backbone: str = "bottom-up"
    text_model: str = "bert-base-uncased"
    folds: int = DEFAULT_FOLDS
    train: TrainConfig = TrainConfig()
    padding: PaddingPolicy = PaddingPolicy()
    dims: Optional[ModelDims] = None

    @validator("dataset")
    def known_dataset(cls, v):
        if v not in datasets:
            raise ValueError(f"dataset must be one of {', '.join(datasets)}")
        return v

    @validator("adapter")
    def known_adapter(cls, v):
        if v not in adapters:
            raise ValueError(f"adapter must be one of {', '.join(adapters)}")
        return v

    @validator("visual_backbone")
    def known_backbone(cls, v):
        if v not in visual_backbones:
            raise ValueError(
                f"visual backbone must be one of {', '.join(visual_backbones)}"
            )
        return v

    @validator("folds")
    def at_least_two_folds(cls, v):
        if v < 2:
            raise ValueError("at least two folds are required")
        return v

    @classmethod
    def resolve(
        cls, config_file: Optional[Path] = None, overrides: Mapping[str, Any] = {}
    ) -> "RunConfig":
        """flags > config file > defaults.

        ``overrides`` uses dotted keys for nested sections (``train.top_k``);
        ``None`` values mean the flag was not given.
        """
        merged: Dict[str, Any] = {}
        if config_file is not None:
            merged = json.loads(Path(config_file).read_text(encoding="utf-8"))

        for key, value in overrides.items():
            if value is None:
                continue
            section, _, field = key.rpartition(".")
            target = merged.setdefault(section, {}) if section else merged
            target[field] = value

        train = merged.setdefault("train", {})
        if "top_k" not in train:
            train["top_k"] = DATASET_TOP_K[merged.get("dataset", "custom")]
        return cls.parse_obj(merged)

    def model_dims(self) -> ModelDims:
        if self.dims is not None:
            return self.dims
        if self.adapter == "toy":
            return ModelDims.toy()
        return ModelDims(d_image=backbone_widths[self.visual_backbone])

    def encoder_options(self) -> Dict[str, Any]:
        if self.adapter == "toy":
            dims = self.model_dims()
            return {"d_text": dims.d_text, "d_image": dims.d_image}
        return {"text_model": self.text_model, "visual_backbone": self.visual_backbone}

    def require_data_root(self) -> Path:
        if self.data_root is None:
            raise FileNotFoundError("no dataset root given, pass --data-root")
        if not self.data_root.exists():
            raise FileNotFoundError(f"dataset root does not exist: {self.data_root}")
        return self.data_root

    def echo(self) -> Dict[str, Any]:
        return json.loads(self.json())

    def write_echo(self, directory: Optional[Path] = None) -> Path:
        directory = Path(directory or self.out)
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / CONFIG_ECHO_FILE
        path.write_text(json.dumps(self.echo(), indent=2), encoding="utf-8")
        return path
