import config

run_settings = {"threads": config.THREADS}
scenario_registry = {}
