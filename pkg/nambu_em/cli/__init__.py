from .runner import main, cli, cmd_run, cmd_audit, cmd_convergence, cmd_ic, build_state
