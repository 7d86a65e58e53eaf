package store;

import org.slf4j.Logger;
import org.slf4j.LoggerFactory;

public class BlockStore {
    private static final Logger LOG = LoggerFactory.getLogger(BlockStore.class);

    public void open(String dir) {
        LOG.info("Opening block store at " + dir);
        // LOG.info("this call is commented out");
        if (dir.isEmpty()) {
            LOG.error("Storage directory must not be empty");
        }
        LOG.debug("debug output is out of scope");
        LOG.warn("Block {} is under-replicated, expected {} copies",
                blockId,
                replication);
    }

    public void close() {
        LOG.info("Closed " + count + " blocks in "
                + elapsed + " ms");
        System.out.println("not a logging call");
        LOG.error(String.format("Failed to flush %s after %d retries", name, retries));
        LOG.warn("Quota exceeded");
        LOG.trace("trace output is out of scope");
    }

    void report(Exception e) {
        LOG.error("Unexpected failure while reporting", e);
        LOG.info(
            "Report written to {}",
            path);
    }
}
