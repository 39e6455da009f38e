"""
roaddiv - Road Diversity Measures
"""
from setuptools import setup, find_packages
from pathlib import Path

readme_file = Path(__file__).parent / "README.md"
long_description = readme_file.read_text(encoding="utf-8") if readme_file.exists() else ""

setup(
    name="roaddiv",
    version="0.1.0",  # keep in step with pyproject.toml and __init__.py
    author="roaddiv contributors",
    description="Road diversity measures for lane-keeping test suites.",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests*", "examples*"]),
    python_requires=">=3.10",
    install_requires=[
        "numpy>=1.24",
        "scipy>=1.10",
        "shapely>=2.0",
        "pandas>=1.5",
        "pydantic>=2.0.0",
        "PyYAML>=6.0",
    ],
    extras_require={
        "dev": ["pytest>=7.0.0", "similaritymeasures>=1.0", "black", "mypy"],
    },
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Topic :: Scientific/Engineering",
        "Topic :: Software Development :: Testing",
    ],
    keywords="autonomous-driving testing diversity road-geometry",
    entry_points={
        "console_scripts": [
            "roaddiv=roaddiv.cli:main",
        ]
    },
)
