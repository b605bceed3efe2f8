"""Adapter around external pretrained encoders.

Text goes through a BERT-style contextual encoder from ``transformers``;
images go through ``torchvision`` models. Both live behind the optional
``pretrained`` extra and are only imported when this adapter is built.
"""
import logging
import threading
from pathlib import Path
from typing import Literal

import torch
from PIL import Image, UnidentifiedImageError

from form_rumor.encoders.base import EncoderAdapter
from form_rumor.exceptions import EncoderUnavailableError, ImageReadError

VisualBackbone = Literal["bottom-up", "resnet101", "vgg19"]

visual_backbones = ("bottom-up", "resnet101", "vgg19")

backbone_widths = {"bottom-up": 2048, "resnet101": 2048, "vgg19": 512}

_imagenet_mean = (0.485, 0.456, 0.406)
_imagenet_std = (0.229, 0.224, 0.225)


class PretrainedEncoder(EncoderAdapter):
    """Region (bottom-up) or grid visual features plus contextual token states.

    Inference is serialized with a lock, so one instance can be shared by the
    concurrent encoding pipeline.
    """

    def __init__(
        self,
        text_model: str = "bert-base-uncased",
        visual_backbone: VisualBackbone = "bottom-up",
        device: str = "cpu",
        detection_threshold: float = 0.2,
    ):
        if visual_backbone not in visual_backbones:
            raise EncoderUnavailableError(
                "pretrained",
                f"visual backbone must be one of {', '.join(visual_backbones)}",
            )
        try:
            import torchvision
            from transformers import AutoModel, AutoTokenizer
        except ImportError as ex:
            raise EncoderUnavailableError(
                "pretrained",
                f"{ex.name} is not installed. "
                f"Example: pipx install form-rumor[pretrained]",
            )

        self.device = torch.device(device)
        self.visual_backbone = visual_backbone
        self.detection_threshold = detection_threshold
        self._lock = threading.Lock()

        try:
            self.tokenizer = AutoTokenizer.from_pretrained(text_model)
            self.text_encoder = AutoModel.from_pretrained(text_model).to(self.device)
            self.image_trunk, self.detector = self._build_visual(
                torchvision, visual_backbone
            )
        except OSError as ex:
            raise EncoderUnavailableError("pretrained", str(ex))

        self.text_encoder.eval()
        self.d_text = self.text_encoder.config.hidden_size
        self.d_image = backbone_widths[visual_backbone]
        self.adapter_id = f"pretrained-{text_model}-{visual_backbone}"
        logging.info(f"Encoder adapter: {self.adapter_id} on {self.device}")

    def _build_visual(self, torchvision, visual_backbone: str):
        models = torchvision.models
        if visual_backbone == "vgg19":
            trunk = models.vgg19(weights="DEFAULT").features
            detector = None
        else:
            resnet = models.resnet101(weights="DEFAULT")
            # Everything up to and including the C5 block
            trunk = torch.nn.Sequential(*list(resnet.children())[:-2])
            detector = None
            if visual_backbone == "bottom-up":
                detector = models.detection.fasterrcnn_resnet50_fpn(weights="DEFAULT")
                detector.eval().to(self.device)
        trunk.eval().to(self.device)
        return trunk, detector

    @torch.no_grad()
    def text_states(self, text: str, max_tokens: int) -> torch.Tensor:
        inputs = self.tokenizer(
            text, truncation=True, max_length=max_tokens, return_tensors="pt"
        ).to(self.device)
        with self._lock:
            hidden = self.text_encoder(**inputs).last_hidden_state[0]
        return hidden.T.float().cpu()

    @torch.no_grad()
    def pad_embedding(self) -> torch.Tensor:
        table = self.text_encoder.get_input_embeddings().weight
        return table[self.tokenizer.pad_token_id].float().cpu().clone()

    def _load_image(self, image_path: Path) -> torch.Tensor:
        from torchvision.transforms import functional

        try:
            with Image.open(image_path) as image:
                rgb = image.convert("RGB")
        except (UnidentifiedImageError, OSError) as ex:
            raise ImageReadError(image_path, str(ex))
        return functional.to_tensor(rgb).to(self.device)

    @torch.no_grad()
    def detect_objects(self, image_path: Path, max_objects: int) -> torch.Tensor:
        from torchvision.ops import roi_align
        from torchvision.transforms import functional

        pixels = self._load_image(image_path)
        normalized = functional.normalize(pixels, _imagenet_mean, _imagenet_std)

        with self._lock:
            feature_map = self.image_trunk(normalized.unsqueeze(0))  # 1 x C x h x w
            if self.detector is None:
                side = max(1, int(max_objects**0.5))
                grid = torch.nn.functional.adaptive_avg_pool2d(feature_map, side)
                return grid.flatten(2)[0].float().cpu()

            detections = self.detector([pixels])[0]

        keep = detections["scores"] >= self.detection_threshold
        boxes = detections["boxes"][keep][:max_objects]
        if boxes.shape[0] == 0:
            return torch.empty(self.d_image, 0)
        scale = feature_map.shape[-1] / pixels.shape[-1]
        pooled = roi_align(
            feature_map, [boxes], output_size=(7, 7), spatial_scale=scale, aligned=True
        )
        return pooled.mean(dim=(2, 3)).T.float().cpu()
