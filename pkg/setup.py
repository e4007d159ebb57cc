#!/usr/bin/env python3
"""
Setup script for DSCM FEM

This script allows the finite element library and its command line
interface to be installed as a Python package.
"""

from setuptools import setup, find_packages
from pathlib import Path

# Read the README file
readme_path = Path(__file__).parent / "README.md"
long_description = readme_path.read_text(encoding="utf-8") if readme_path.exists() else ""

# Runtime requirements (development tools are listed in requirements.txt)
requirements = [
    "PyYAML>=6.0",
    "psutil>=5.9.0",
    "numpy>=1.24.0",
    "scipy>=1.12.0",
    "pandas>=2.0.0",
]

# Development requirements
dev_requirements = [
    "pytest>=7.4.0",
    "pytest-cov>=4.1.0",
    "black>=23.0.0",
    "flake8>=6.0.0",
    "mypy>=1.5.0",
]

setup(
    name="dscm-fem",
    version="1.0.0",
    description="P1 finite elements with graded meshes and the dual singular complement method "
                "for Poisson problems with L2 Dirichlet data",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    py_modules=["main"],
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Mathematics",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Operating System :: OS Independent",
    ],
    python_requires=">=3.9",
    install_requires=requirements,
    extras_require={
        "dev": dev_requirements,
    },
    entry_points={
        "console_scripts": [
            "dscm-fem=main:main",
        ],
    },
    include_package_data=True,
    package_data={
        "": ["config.yaml"],
    },
    zip_safe=False,
    keywords=[
        "finite-element",
        "poisson",
        "corner-singularity",
        "graded-mesh",
        "newest-vertex-bisection",
        "singular-complement",
    ],
    platforms=["any"],
    license="MIT",
)
