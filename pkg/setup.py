# -*- coding: utf-8 -*-
from setuptools import setup

package_dir = {"": "src"}

packages = [
    "form_rumor",
    "form_rumor.cli",
    "form_rumor.encoders",
    "form_rumor.models",
    "form_rumor.network",
    "form_rumor.training",
]

package_data = {"": ["*"]}

install_requires = [
    "Pillow>=10.0,<11.0",
    "asgiref>=3.7,<4.0",
    "numpy>=1.24,<2.0",
    "pandas>=2.0,<3.0",
    "pydantic>=1.10.0,<2.0.0",
    "scikit-learn>=1.3,<2.0",
    "single-source>=0.3.0,<0.4.0",
    "torch>=2.1,<3.0",
    "typer[all]>=0.9.0,<0.10.0",
]

extras_require = {
    "plot": ["matplotlib>=3.7,<4.0"],
    "pretrained": ["transformers>=4.35,<5.0", "torchvision>=0.16,<0.17"],
}

entry_points = {"console_scripts": ["form = form_rumor.cli.form:app"]}

setup_kwargs = {
    "name": "form-rumor",
    "version": "0.3.0",
    "description": "Multi-modal rumor detection: coarse-grained selection of responding tweets and fine-grained relation reasoning over a text+image claim.",
    "long_description": "# form-rumor\nMulti-modal rumor detection for conversation threads. A claim (text plus an optional image) and its responding tweets go in. A four-way veracity prediction comes out: `false`, `true`, `unverified` or `non-rumor`.\n\nSee the [CLI docs](CLI.md) for every command and option.",
    "author": "FoRM maintainers",
    "author_email": "None",
    "maintainer": "FoRM maintainers",
    "maintainer_email": "None",
    "url": "None",
    "package_dir": package_dir,
    "packages": packages,
    "package_data": package_data,
    "install_requires": install_requires,
    "extras_require": extras_require,
    "entry_points": entry_points,
    "python_requires": ">=3.9,<4.0",
}


setup(**setup_kwargs)
