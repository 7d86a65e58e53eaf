import logging

log = logging.getLogger("queue")


class Queue:
    def put(self, item):
        log.info("Queued item " + str(item))
        log.critical("critical output is out of scope")
        log.error("Queue is full")

    def get(self):
        log.warning(
            "Queue empty, waiting "
            + str(self.timeout)
            + " seconds"
        )
        log.info(self.state)
