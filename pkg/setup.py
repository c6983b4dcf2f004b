#!/usr/bin/env python3
"""
Setup script for affinedim
"""

from setuptools import setup, find_packages
import os

# Read README for long description
def read_readme():
    readme_path = os.path.join(os.path.dirname(__file__), 'README.md')
    if os.path.exists(readme_path):
        with open(readme_path, 'r', encoding='utf-8') as f:
            return f.read()
    return "A CLI tool for the dimension theory of affine iterated function systems"

# Read the core block of requirements.txt (everything before the first blank line)
def read_requirements():
    requirements_path = os.path.join(os.path.dirname(__file__), 'requirements.txt')
    requirements = []
    if os.path.exists(requirements_path):
        with open(requirements_path, 'r', encoding='utf-8') as f:
            started = False
            for line in f:
                line = line.strip()
                if not line:
                    if started:
                        break
                    continue
                if line.startswith('#'):
                    continue
                started = True
                requirements.append(line)

    core_requirements = [
        "click>=8.0.0",
        "numpy>=1.22.0",
        "pandas>=1.5.0",
        "scipy>=1.8.0",
    ]

    # Add core requirements if not already present
    for req in core_requirements:
        package_name = req.split('>=')[0].split('==')[0]
        if not any(existing.startswith(package_name) for existing in requirements):
            requirements.append(req)

    return requirements

setup(
    name="affinedim",
    version="1.0.0",
    author="Ryan Sweigart",
    author_email="coffeedatadev@gmail.com",
    description="A CLI tool for the dimension theory of affine iterated function systems",
    long_description=read_readme(),
    long_description_content_type="text/markdown",
    url="https://github.com/ryansweigart3/affinedim",
    packages=find_packages(include=["src*"]),
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Environment :: Console",
    ],
    python_requires=">=3.8",
    install_requires=read_requirements(),
    extras_require={
        "dev": [
            "pytest>=7.0.0",
            "pytest-cov>=4.0.0",
            "hypothesis>=6.0.0",
            "mpmath>=1.2.0",
        ],
        "test": [
            "pytest>=7.0.0",
            "hypothesis>=6.0.0",
            "mpmath>=1.2.0",
        ],
    },
    entry_points={
        "console_scripts": [
            "affinedim=src.main:main",
        ],
    },
    include_package_data=True,
    zip_safe=False,
    keywords="fractal dimension affine ifs lyapunov pressure cli",
)
