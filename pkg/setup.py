from setuptools import setup, find_packages

setup(
    name='predevaltools',
    version='0.1.0',
    packages=find_packages(exclude=['tests', 'tests.*']),
    install_requires=[
        "numpy==2.0.2",
        "polars==1.16.0",
        "scipy==1.13.1",
        "POT==0.9.5",
        "tomli==2.2.1"
    ],
    entry_points={
        'console_scripts': [
            'predeval=predevaltools.cli.main:entry',
        ],
    },
    author='Guilherme dos Santos Magalhães',
    author_email='silcol455@gmail.com',
    description='Label-free accuracy estimation and model ranking from classifier prediction matrices',
    long_description_content_type='text/markdown',
    url='https://github.com/guisilcol/predevaltools',
    classifiers=[
        'Programming Language :: Python :: 3',
        'License :: OSI Approved :: MIT License',
        'Operating System :: OS Independent',
    ],
    python_requires='>=3.9',
)
