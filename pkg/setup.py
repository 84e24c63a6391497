import setuptools


PROJECT_NAME = 'ptbreather'
PROJECT_VERSION = '0.3.0'


def read_file(filename, return_as_array=True):
    empty_resp = [] if return_as_array else ''
    try:
        with open(filename) as f:
            if return_as_array:
                arr = f.readlines()
                arr = [x.strip() for x in arr if x.strip()]
                return arr
            else:
                return f.read()
    except OSError:
        return empty_resp


def read_requirements():
    reqs = read_file('requirements.txt')
    return reqs


setuptools.setup(
    name=PROJECT_NAME,
    version=PROJECT_VERSION,
    description="Breathers of the PT-symmetric discrete NLS lattice: continuation, Hessian spectra and "
                "Lyapunov metastability experiments.",
    packages=setuptools.find_packages(exclude=['tests', 'examples', 'examples.*']),
    install_requires=read_requirements(),
    include_package_data=True,
    package_data={'ptbreather': ['languages/*.json']},
    entry_points={
        'console_scripts': ['ptbreather = ptbreather.cli.main:run'],
    },
    python_requires='>=3.8',
)
