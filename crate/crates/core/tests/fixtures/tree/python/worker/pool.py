import logging

logger = logging.getLogger(__name__)


def start(n):
    logger.info("Starting %d workers", n)
    # logger.info("commented out")
    if n == 0:
        logger.warning("No workers configured, using %s", DEFAULT)
    logger.debug("debug output is out of scope")
    logger.error(
        "Worker %s crashed: %s",
        name,
        err,
    )
    print("not a logging call")


def stop(pool):
    logger.info(f"Stopping pool {pool.name} with {len(pool)} workers")
    logger.warning("Pool did not drain; "
                   "forcing shutdown")
    logger.exception("Shutdown failed")
    logger.info("Task {} finished in {:.2f}s".format(task, secs))
