from setuptools import setup, find_packages
from typing import List

#Declaring Variables for setup function
PROJECT_NAME="knn-rate-lab"
VERSION="0.1.0"
AUTHOR="Somesh Trivedi"
DESCRIPTION="k-NN kernel estimators of density and regression with a seeded rate laboratory"
REQUIREMENTS_FILE_NAME="requirements.txt"
HYPHEN_E_DOT="-e ."
TEST_REQUIREMENTS=["pytest"]

def get_requirements_list()->List[str]:
    """Description: This function is going to return list of requirement
        mentioned in requirements.txt file

        return This function is going to return a list which contains name of libraries
        mentioned in requirements.txt file, without the editable-install line
        """
    with open(REQUIREMENTS_FILE_NAME) as requirement_file:
        requirements = [line.strip() for line in requirement_file.readlines()]
        return [line for line in requirements if line and line != HYPHEN_E_DOT and line not in TEST_REQUIREMENTS and not line.startswith("#")]


setup(
    name=PROJECT_NAME,
    version=VERSION,
    author=AUTHOR,
    description=DESCRIPTION,
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    python_requires=">=3.8",
    install_requires=get_requirements_list(),
    extras_require={"test": TEST_REQUIREMENTS},
    entry_points={"console_scripts": ["knn-lab=knnlab.cli:main"]},
)
