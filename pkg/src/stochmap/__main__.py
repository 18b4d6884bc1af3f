from stochmap.cli import run

run()
