package store;

import java.util.logging.Logger;

class Replicator {
    private static final Logger logger = Logger.getLogger("replicator");

    void run() {
        logger.info("Replication started");
        logger.severe("Replica " + id + " lost");
        logger.warning("Retrying replica " + id
            + " on node " + node);
        logger.fine("fine output is out of scope");
        logger.info(message);
        logger.info("Synced %d of %d segments".formatted(done, total));
    }

    void fail(String reason) {
        logger.warning("Giving up: " + reason);
    }
}
