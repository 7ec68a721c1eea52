import setuptools

with open("README.md", "r") as fh:
    long_description = fh.read()

VERSION = "0.3.0"

try:
    with open('./polyclick/_version.py', 'wt') as versionfile:
        versionfile.write(f'__version__ = "{VERSION}"\n')
except FileNotFoundError:
    pass

# See https://packaging.python.org/tutorials/packaging-projects/
setuptools.setup(
    name="polyclick",
    version=VERSION,
    description="Higher-order spectra of blinking quantum emitters from single-photon click records",
    long_description=long_description,
    long_description_content_type="text/markdown",
    license="GPL",
    packages=setuptools.find_packages(
        include=["polyclick*"], exclude=["examples*"]),
    include_package_data=True,
    setup_requires=["wheel"],
    install_requires=[
        "numpy",
        "scipy",
        "toml>=0.10.2",
        "prettytable",
        "semver"
    ],
    zip_safe=False,
    keywords=["polyspectra", "quantum dot", "single photon", "telegraph noise"],
    classifiers=[
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "License :: OSI Approved :: GNU General Public License (GPL)",
        "Operating System :: POSIX :: Linux",
        "Intended Audience :: Science/Research",
        "Development Status :: 3 - Alpha"
    ],
    entry_points={
        "console_scripts": [
            "polyclick=polyclick.cli:main",
        ],
    },
    python_requires=">=3.8"
)
