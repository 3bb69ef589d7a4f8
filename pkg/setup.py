from setuptools import setup


def get_version():
    from pathlib import Path

    init_path = Path("depthlab/__init__.py")

    with init_path.open() as file_:
        for line in file_.readlines():
            if line.startswith("__version__"):
                return line.split('"')[1]


setup(
    name="depthlab",
    version=get_version(),
    description="Observer-relative depth profiles of binary sequences.",
    long_description=open("README.md", encoding="utf-8").read(),
    long_description_content_type="text/markdown",
    author="depthlab developers",
    license="BSD",
    packages=["depthlab"],
    platforms=["any"],
    install_requires=["numpy>=1.21"],
    entry_points={"console_scripts": ["depthlab=depthlab.depthlab_cli:main"]},
    classifiers=[
        "Programming Language :: Python",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "License :: OSI Approved :: BSD License",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Operating System :: OS Independent",
        "Natural Language :: English",
    ],
    test_suite="tests",
    tests_require=["pytest", "hypothesis"],
)
