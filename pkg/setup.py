import pathlib

from setuptools import find_packages, setup

REQUIRED_PACKAGES = [
    "numpy>=1.26.4",
    "pandas",
    "addict==2.4.0",
    "yapf",
    "pyyaml",
    "termcolor",
    "tqdm>=4.66.1",
]

TEST_PACKAGES = [
    "pytest",
    "hypothesis",
]


def build_package():
    HERE = pathlib.Path(__file__).parent
    README = (HERE / "description.md").read_text()
    setup(
        name="pcone-plasticity",
        version="0.1.0",
        author="Wilhelm David Buitrago Garcia",
        description="Tangent and normal cone projections for elastic perfectly plastic rate laws",
        long_description=README,
        long_description_content_type="text/markdown",
        package_dir={"": "src"},
        packages=find_packages(where="src"),
        include_package_data=True,
        package_data={
            "pcone": ["scenarios/*.yaml"],
        },
        install_requires=REQUIRED_PACKAGES,
        extras_require={"tests": TEST_PACKAGES},
        entry_points={"console_scripts": ["pcone = pcone.cli:main"]},
        python_requires=">=3.9",
        classifiers=[
            "Programming Language :: Python :: 3",
            "Programming Language :: Python :: 3.10",
        ],
    )


if __name__ == "__main__":
    build_package()
